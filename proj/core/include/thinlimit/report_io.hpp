#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "thinlimit/common.hpp"

namespace thinlimit {

// All file writes are atomic (temp file + rename). CSV uses comma
// separators, '\n' line endings, and a fixed "%.12g" float format so the
// same inputs produce identical bytes.
void atomic_write_text(const std::filesystem::path& path, const std::string& text);

std::string format_double(double v);

struct CsvWriter {
    explicit CsvWriter(std::vector<std::string> header);
    void add_row(const std::vector<std::string>& cells);
    void add_row(const std::vector<double>& cells);
    std::string str() const;
    void write(const std::filesystem::path& path) const;

private:
    size_t width_;
    std::string body_;
};

void write_json_file(const std::filesystem::path& path, const nlohmann::ordered_json& doc);

}  // namespace thinlimit
