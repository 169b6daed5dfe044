#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace psolab::harness {

inline constexpr int schema_version = 1;

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shortest decimal that reads back as the same double.
[[nodiscard]] inline std::string format_number(double v)
{
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

/// Quotes a field when it holds a comma, quote or newline.
[[nodiscard]] inline std::string csv_field(std::string_view s)
{
    if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

[[nodiscard]] inline std::string schema_line() { return "# schema_version=" + std::to_string(schema_version) + "\n"; }

/// Writes `contents` to `path`, creating parent directories. Binary mode
/// keeps LF line endings everywhere.
inline void write_file(const std::filesystem::path& path, std::string_view contents)
{
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

}  // namespace psolab::harness
