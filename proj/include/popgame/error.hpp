// Copyright 2026 The popgame Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef POPGAME_ERROR_HPP_
#define POPGAME_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace popgame {

// Machine-readable category carried by every library exception. The CLI
// reports it in its error JSON.
enum class ErrorCode {
  kInvalidArgument,
  kParse,
  kSchema,
  kSupportCap,
  kInconsistentState,
  kMissingValue,
  kStrategyGap,
  kAssumptionViolated,
  kIo,
};

const char* ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Raised while reading a model or config file. `path` is a JSON pointer to
// the offending field.
class ParseError : public Error {
 public:
  ParseError(const std::string& path, const std::string& message)
      : Error(ErrorCode::kParse, path + ": " + message), path_(path) {}

  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace popgame

#endif  // POPGAME_ERROR_HPP_
