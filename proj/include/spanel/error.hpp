#pragma once

#include <stdexcept>
#include <string>

namespace spanel {

enum class ErrorCode {
  kInvalidArgument,
  kParse,
  kValidation,
  kNotFound,
  kConflict,
  kProvider,
  kIo,
};

const char* to_string(ErrorCode code);

// Every failure surfaced by the library. `module` names the component that
// raised it; `locus` pinpoints the offending field/line/stage when known.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string module, const std::string& message, std::string locus = {})
      : std::runtime_error(message), code_(code), module_(std::move(module)), locus_(std::move(locus)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& module() const noexcept { return module_; }
  const std::string& locus() const noexcept { return locus_; }

 private:
  ErrorCode code_;
  std::string module_;
  std::string locus_;
};

}  // namespace spanel
