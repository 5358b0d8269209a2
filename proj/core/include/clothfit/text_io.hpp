#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace clothfit {

// Formats a double with 17 significant digits, enough for an exact
// binary round-trip through text.
std::string format_double(double v);

// FNV-1a 64-bit, used for content hashes in task-set manifests.
uint64_t fnv1a64(std::string_view data);
std::string hex64(uint64_t v);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

// Splits on single spaces; no empty tokens for repeated spaces.
std::vector<std::string_view> split_ws(std::string_view line);

double parse_double(std::string_view tok);
long long parse_int(std::string_view tok);

// Line-oriented cursor over a text document, shared by the mesh and
// task-set parsers.
class LineReader {
public:
    explicit LineReader(std::string_view text) : text_(text) {}

    // Next line without its trailing newline; false at end of input.
    bool next(std::string_view& line);
    bool eof() const { return pos_ >= text_.size(); }
    size_t line_number() const { return line_no_; }

private:
    std::string_view text_;
    size_t pos_ = 0;
    size_t line_no_ = 0;
};

} // namespace clothfit
