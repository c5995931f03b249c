#pragma once

#include <stdexcept>
#include <string>

namespace slu {

// All recoverable failures surface as Error; the CLI turns them into a
// one-line diagnostic and a nonzero exit.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

[[noreturn]] inline void fail(const std::string& msg) { throw Error(msg); }

inline void require(bool cond, const std::string& msg) {
  if (!cond) fail(msg);
}

}  // namespace slu
