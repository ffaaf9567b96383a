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

// Umbrella header for the library (everything except the HTTP service and
// the CLI, which pull in cpp-httplib and CLI11).

#pragma once

#include "hsassist/corpus.hpp"
#include "hsassist/encoder.hpp"
#include "hsassist/errors.hpp"
#include "hsassist/eval.hpp"
#include "hsassist/hs_code.hpp"
#include "hsassist/model_io.hpp"
#include "hsassist/report.hpp"
#include "hsassist/retrieval.hpp"
#include "hsassist/synthetic.hpp"
#include "hsassist/text.hpp"
#include "hsassist/tokenizer.hpp"
