#pragma once

#include <stdexcept>
#include <string>

namespace slatejudge {

// Base class for every error raised by the library. Callers that only need to
// report a failure catch this; tests catch the concrete subclasses.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define SLATEJUDGE_DEFINE_ERROR(Name)        \
  class Name : public Error {                \
   public:                                   \
    using Error::Error;                      \
  }

SLATEJUDGE_DEFINE_ERROR(InvalidArgument);
SLATEJUDGE_DEFINE_ERROR(DuplicateItem);
SLATEJUDGE_DEFINE_ERROR(UnknownItem);
SLATEJUDGE_DEFINE_ERROR(ConflictingOutcomes);
SLATEJUDGE_DEFINE_ERROR(MissingRating);
SLATEJUDGE_DEFINE_ERROR(RatingOutOfScale);
SLATEJUDGE_DEFINE_ERROR(EmptyReference);
SLATEJUDGE_DEFINE_ERROR(MissingPlaceholder);
SLATEJUDGE_DEFINE_ERROR(InvalidTemplate);
SLATEJUDGE_DEFINE_ERROR(TransportError);
SLATEJUDGE_DEFINE_ERROR(AuthError);
SLATEJUDGE_DEFINE_ERROR(EmptyEnsemble);
SLATEJUDGE_DEFINE_ERROR(MissingOutcome);
SLATEJUDGE_DEFINE_ERROR(EmptyText);
SLATEJUDGE_DEFINE_ERROR(DegenerateEmbedding);
SLATEJUDGE_DEFINE_ERROR(DegenerateVariance);
SLATEJUDGE_DEFINE_ERROR(IoError);
SLATEJUDGE_DEFINE_ERROR(ConfigError);
SLATEJUDGE_DEFINE_ERROR(InvalidParams);

#undef SLATEJUDGE_DEFINE_ERROR

// Malformed input file. `line` is 1-based, 0 when the error is not tied to a
// line.
class ParseError : public Error {
 public:
  ParseError(const std::string& path, int line, const std::string& what)
      : Error(path + (line > 0 ? ":" + std::to_string(line) : "") + ": " +
              what),
        line_(line) {}

  int line() const { return line_; }

 private:
  int line_;
};

}  // namespace slatejudge
