#pragma once

#include <stdexcept>
#include <string>

namespace redes {

enum class Errc {
  invalid_mac,
  invalid_action,
  empty_identifier,
  invalid_identifier,
  invalid_difficulty,
  empty_pending,
  tip_moved,
  invalid_address,
  self_registration,
  parse_error,
  script_error,
  command_failed,
  io_error,
  config_error,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(errc_name(code)) + ": " + detail), code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

}  // namespace redes
