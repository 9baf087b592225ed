#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace pcl {

std::string read_text_file(const std::filesystem::path& path);

// Writes atomically (temp file + rename) so partially written artifacts are
// never observed by concurrent readers.
void write_text_file(const std::filesystem::path& path, const std::string& content);

std::vector<std::string> split_tabs(const std::string& line);

// Trims ASCII whitespace from both ends.
std::string trim(const std::string& s);

std::string lowercase_ascii(std::string s);

// Splits a file into lines, accepting both \n and \r\n endings and ignoring a
// trailing empty line.
std::vector<std::string> read_lines(const std::filesystem::path& path);

// Shortest decimal form that parses back to the same double (%.17g fallback).
std::string format_double(double v);

// FNV-1a 64-bit over the given bytes.
std::uint64_t fnv1a64(const std::string& bytes);

// splitmix64 mix, used to derive independent stream seeds from one run seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// Appends one line to a file under an exclusive flock; creates it if absent.
void append_line_locked(const std::filesystem::path& path, const std::string& line);

}  // namespace pcl
