/* Copyright 2026 The LightNet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef LIGHTNET_ERROR_HPP_
#define LIGHTNET_ERROR_HPP_

#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace lightnet {

// Coarse error classes. The C API maps each onto an lwn_status value.
enum class ErrorCode {
  kInvalidArgument,  // caller-supplied value, shape or file content is invalid
  kFormat,           // a serialized artifact is malformed
  kIo,               // the filesystem refused a read or write
  kNumeric,          // NaN or Inf appeared
  kState,            // operation invoked in the wrong order
  kInternal,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

namespace detail {

template <typename... Args>
std::string concat(Args&&... args) {
  std::ostringstream os;
  (os << ... << std::forward<Args>(args));
  return os.str();
}

}  // namespace detail

template <typename... Args>
[[noreturn]] void fail(ErrorCode code, Args&&... args) {
  throw Error(code, detail::concat(std::forward<Args>(args)...));
}

template <typename... Args>
void require(bool condition, Args&&... args) {
  if (!condition) fail(ErrorCode::kInvalidArgument, std::forward<Args>(args)...);
}

}  // namespace lightnet

#endif  // LIGHTNET_ERROR_HPP_
