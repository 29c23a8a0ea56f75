#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tclean {

// Every validation failure derives from Error; IoError is kept separate so the
// CLI can map it to its own exit status.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

#define TCLEAN_ERROR(Name)   \
  class Name : public Error {  \
   public:                     \
    using Error::Error;        \
  }

TCLEAN_ERROR(MalformedCapture);
TCLEAN_ERROR(SchemaMismatch);
TCLEAN_ERROR(ValueError);
TCLEAN_ERROR(EmptyFlow);
TCLEAN_ERROR(TooFewRows);
TCLEAN_ERROR(ShapeMismatch);
TCLEAN_ERROR(LabelTooSmall);
TCLEAN_ERROR(SingleClass);
TCLEAN_ERROR(EmptyTest);
TCLEAN_ERROR(InvalidSpec);

#undef TCLEAN_ERROR

/// Error in a line-oriented text input; line() is 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& detail, const std::string& source = {})
      : Error((source.empty() ? std::string() : source + ": ") + "line " +
              std::to_string(line) + ": " + detail),
        line_(line),
        detail_(detail) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& detail() const noexcept { return detail_; }

  /// Same error, attributed to a file.
  ParseError in_file(const std::string& source) const { return {line_, detail_, source}; }

 private:
  std::size_t line_;
  std::string detail_;
};

}  // namespace tclean
