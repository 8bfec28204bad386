#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cuebuddy {

/// Base class for every error raised by the library. `code()` is the stable
/// identifier used on the wire and in CLI diagnostics.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define CUEBUDDY_DEFINE_ERROR(Name)                                      \
  class Name : public Error {                                            \
   public:                                                               \
    explicit Name(const std::string& what) : Error(#Name, what) {}       \
  };

// transcript_ingest
CUEBUDDY_DEFINE_ERROR(MalformedLine)
CUEBUDDY_DEFINE_ERROR(OutOfOrderRevision)
CUEBUDDY_DEFINE_ERROR(EventAfterFinal)

// spotter
CUEBUDDY_DEFINE_ERROR(DuplicatePattern)
CUEBUDDY_DEFINE_ERROR(EmptyPatternSet)
CUEBUDDY_DEFINE_ERROR(InvalidPattern)

// glossary
CUEBUDDY_DEFINE_ERROR(InvalidGlossary)
CUEBUDDY_DEFINE_ERROR(UnknownTerm)
CUEBUDDY_DEFINE_ERROR(EmptyTranscript)
CUEBUDDY_DEFINE_ERROR(AdapterUnavailable)
CUEBUDDY_DEFINE_ERROR(AdapterTimeout)
CUEBUDDY_DEFINE_ERROR(MalformedAdapterReply)

// session_service
CUEBUDDY_DEFINE_ERROR(UnknownGlossary)
CUEBUDDY_DEFINE_ERROR(InvalidConfig)
CUEBUDDY_DEFINE_ERROR(UnknownSession)
CUEBUDDY_DEFINE_ERROR(UnknownClient)
CUEBUDDY_DEFINE_ERROR(InvalidLanguage)
CUEBUDDY_DEFINE_ERROR(SecondIngestRejected)

#undef CUEBUDDY_DEFINE_ERROR

/// Malformed record in an input file. Carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("ParseError", "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace cuebuddy
