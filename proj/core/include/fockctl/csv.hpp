#pragma once

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fockctl {

/// Minimal CSV writer with a pinned numeric format so identical runs emit
/// byte-identical files.
class CsvWriter {
  public:
    CsvWriter(const std::string& path, const std::string& header) : out_(path) {
        if (!out_) throw std::runtime_error("csv: cannot write '" + path + "'");
        out_ << header << "\n";
    }

    void field(double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.10g", v);
        cell(buf);
    }
    void field(int v) { cell(std::to_string(v)); }
    void field(long v) { cell(std::to_string(v)); }
    void field(unsigned long long v) { cell(std::to_string(v)); }
    void field(const std::string& s) { cell(s); }

    void endrow() {
        out_ << "\n";
        first_ = true;
    }

  private:
    void cell(const std::string& s) {
        if (!first_) out_ << ",";
        out_ << s;
        first_ = false;
    }
    std::ofstream out_;
    bool first_ = true;
};

}  // namespace fockctl
