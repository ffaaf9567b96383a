// Copyright 2026 The hs-assist Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hsassist {

/// Base of every error raised by the library. `code()` is a stable,
/// machine-readable identifier (used verbatim in CLI and HTTP error bodies).
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error("PARSE_ERROR", "line " + std::to_string(line) + ": " + message), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

#define HSASSIST_DEFINE_ERROR(Name, Code)                                   \
  class Name : public Error {                                               \
   public:                                                                  \
    explicit Name(const std::string& message) : Error(Code, message) {}     \
  }

HSASSIST_DEFINE_ERROR(ValidationError, "VALIDATION_ERROR");
HSASSIST_DEFINE_ERROR(DuplicateHeadingError, "DUPLICATE_HEADING");
HSASSIST_DEFINE_ERROR(EmptyEvidenceError, "EMPTY_EVIDENCE");
HSASSIST_DEFINE_ERROR(SplitError, "SPLIT_ERROR");
HSASSIST_DEFINE_ERROR(EmptyCorpusError, "EMPTY_CORPUS");
HSASSIST_DEFINE_ERROR(LabelCoverageError, "LABEL_COVERAGE");
HSASSIST_DEFINE_ERROR(EmptyDescriptionError, "EMPTY_DESCRIPTION");
HSASSIST_DEFINE_ERROR(DimensionMismatchError, "DIMENSION_MISMATCH");
HSASSIST_DEFINE_ERROR(EmptyKnowledgeBaseError, "EMPTY_KNOWLEDGE_BASE");
HSASSIST_DEFINE_ERROR(UnknownHeadingError, "UNKNOWN_HEADING");
HSASSIST_DEFINE_ERROR(LengthMismatchError, "LENGTH_MISMATCH");
HSASSIST_DEFINE_ERROR(EmptyExpertSetError, "EMPTY_EXPERT_SET");
HSASSIST_DEFINE_ERROR(EmptyGroupError, "EMPTY_GROUP");
HSASSIST_DEFINE_ERROR(DegenerateInputError, "DEGENERATE_INPUT");
HSASSIST_DEFINE_ERROR(ModelFormatError, "MODEL_FORMAT");
HSASSIST_DEFINE_ERROR(IoError, "IO_ERROR");

#undef HSASSIST_DEFINE_ERROR

}  // namespace hsassist
