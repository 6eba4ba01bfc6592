#include "thinlimit/report_io.hpp"

#include <cstdio>
#include <fstream>

namespace thinlimit {

void atomic_write_text(const std::filesystem::path& path, const std::string& text) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw UsageError("cannot open " + tmp.string() + " for writing");
        out << text;
    }
    fs::rename(tmp, path);
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : width_(header.size()) {
    for (size_t i = 0; i < header.size(); ++i)
        body_ += header[i] + (i + 1 < header.size() ? "," : "");
    body_ += "\n";
}

void CsvWriter::add_row(const std::vector<std::string>& cells) {
    if (cells.size() != width_) throw UsageError("CsvWriter: row width mismatch");
    for (size_t i = 0; i < cells.size(); ++i)
        body_ += cells[i] + (i + 1 < cells.size() ? "," : "");
    body_ += "\n";
}

void CsvWriter::add_row(const std::vector<double>& cells) {
    std::vector<std::string> s;
    s.reserve(cells.size());
    for (double v : cells) s.push_back(format_double(v));
    add_row(s);
}

std::string CsvWriter::str() const { return body_; }

void CsvWriter::write(const std::filesystem::path& path) const {
    atomic_write_text(path, body_);
}

void write_json_file(const std::filesystem::path& path, const nlohmann::ordered_json& doc) {
    atomic_write_text(path, doc.dump(2) + "\n");
}

}  // namespace thinlimit
