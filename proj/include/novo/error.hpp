#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace novo {

/// Base class for every error raised by the engine.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Two operands disagree on shape, or a shape violates a precondition.
class ShapeError : public Error {
  public:
    using Error::Error;
};

/// A numeric argument is outside its documented domain.
class ValueError : public Error {
  public:
    using Error::Error;
};

/// Malformed on-disk data. `offset` is the byte offset (or line number for
/// line-oriented formats) at which the problem was detected.
class FormatError : public Error {
  public:
    FormatError(std::string path, std::uint64_t offset, const std::string& what)
        : Error(path + " @" + std::to_string(offset) + ": " + what), path_(std::move(path)),
          offset_(offset) {}

    const std::string& path() const { return path_; }
    std::uint64_t offset() const { return offset_; }

  private:
    std::string path_;
    std::uint64_t offset_;
};

/// A file could not be opened, read, or written.
class IoError : public Error {
  public:
    using Error::Error;
};

/// A replay record or other keyed lookup has no entry.
class NotFoundError : public Error {
  public:
    using Error::Error;
};

/// Aggregated validation failures (manifest loading reports all of them).
class ValidationError : public Error {
  public:
    explicit ValidationError(std::vector<std::string> violations)
        : Error(join(violations)), violations_(std::move(violations)) {}

    const std::vector<std::string>& violations() const { return violations_; }

  private:
    static std::string join(const std::vector<std::string>& v) {
        std::string out = std::to_string(v.size()) + " validation error(s)";
        for (const auto& s : v) {
            out += "\n  ";
            out += s;
        }
        return out;
    }

    std::vector<std::string> violations_;
};

} // namespace novo
