#pragma once

// ASCII PLY subset: one `vertex` element with float x/y/z properties (other
// scalar vertex properties are ignored) and one `face` element whose only
// property is a list of exactly three vertex indices. Units are meters.

#include <filesystem>
#include <stdexcept>
#include <string>

#include "maskval/geometry.h"

namespace maskval {

class PlyParseError : public std::runtime_error {
 public:
  PlyParseError(int line, const std::string& message,
                const std::string& source = "")
      : std::runtime_error((source.empty() ? "" : source + ": ") + "line " +
                           std::to_string(line) + ": " + message),
        line_(line),
        message_(message) {}
  int line() const { return line_; }
  const std::string& message() const { return message_; }

 private:
  int line_;
  std::string message_;
};

// Throws PlyParseError on malformed input.
TriangleMesh ParsePly(const std::string& text);
// Throws std::runtime_error if the file cannot be read.
TriangleMesh LoadMesh(const std::filesystem::path& path);

std::string FormatPly(const TriangleMesh& mesh);
void SaveMesh(const std::filesystem::path& path, const TriangleMesh& mesh);

}  // namespace maskval
