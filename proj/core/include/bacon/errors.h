/*
 * Copyright 2026 The BACON Calibration Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef BACON_ERRORS_H_
#define BACON_ERRORS_H_

#include <stdexcept>
#include <string>

namespace bacon {

// Root of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define BACON_DEFINE_ERROR(Name)      \
  class Name : public Error {         \
   public:                            \
    using Error::Error;               \
  }

// Bundle I/O.
BACON_DEFINE_ERROR(FormatError);
BACON_DEFINE_ERROR(IntegrityError);
BACON_DEFINE_ERROR(ValidationError);
BACON_DEFINE_ERROR(IoError);

// Geometry.
BACON_DEFINE_ERROR(DegenerateVectorError);
BACON_DEFINE_ERROR(ShapeError);
BACON_DEFINE_ERROR(ConsistencyError);

// Distribution fitting.
BACON_DEFINE_ERROR(DomainError);
BACON_DEFINE_ERROR(NoModelError);

// Calibration, metrics and the experiment harness.
BACON_DEFINE_ERROR(CalibrationError);
BACON_DEFINE_ERROR(MetricError);
BACON_DEFINE_ERROR(SamplingError);
BACON_DEFINE_ERROR(AggregationError);
BACON_DEFINE_ERROR(ConfigError);

#undef BACON_DEFINE_ERROR

// Raised when a sample set cannot support a maximum-likelihood fit.
class InsufficientDataError : public Error {
 public:
  enum class Reason { kTooFewSamples, kDegenerateSpread };

  InsufficientDataError(Reason reason, const std::string& what)
      : Error(what), reason_(reason) {}

  Reason reason() const noexcept { return reason_; }

 private:
  Reason reason_;
};

}  // namespace bacon

#endif  // BACON_ERRORS_H_
