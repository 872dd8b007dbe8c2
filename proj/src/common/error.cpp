/*
 * Copyright 2026 The apcr Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "common/error.hpp"

namespace apcr {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kBadMagic: return "corrupt magic";
    case ErrorCode::kDimensionMismatch: return "dimension mismatch";
    case ErrorCode::kTruncatedPayload: return "truncated payload";
    case ErrorCode::kVersionMismatch: return "version mismatch";
    case ErrorCode::kNonFinite: return "non-finite value";
    case ErrorCode::kUnsupported: return "unsupported";
    case ErrorCode::kState: return "invalid state";
    case ErrorCode::kCorrupt: return "corrupt data";
  }
  return "unknown";
}

}  // namespace apcr
