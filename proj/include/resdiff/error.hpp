// Copyright 2026 The resdiff Authors
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

#include <stdexcept>
#include <string>
#include <string_view>

namespace resdiff {

enum class Errc {
  ZeroNormQuaternion,
  InvalidTrajectory,
  TooFewObservations,
  IndexOutOfRange,
  ShapeMismatch,
  MissingForwardCache,
  InvalidSteps,
  EmptyDataset,
  NonFiniteLoss,
  LengthMismatch,
  OutOfRange,
  NonPositiveInput,
  EmptyComparisons,
  NoWinsForAnyMethod,
  NonPositivePi,
  UnknownMethodName,
  NoValidSamples,
  NonPositiveScale,
  InvalidParams,
  StrideTooLarge,
  MalformedHeader,
  MalformedRecord,
  NonFiniteValue,
  NonUnitQuaternion,
  CorruptCheckpoint,
  Io,
};

constexpr std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::ZeroNormQuaternion: return "ZeroNormQuaternion";
    case Errc::InvalidTrajectory: return "InvalidTrajectory";
    case Errc::TooFewObservations: return "TooFewObservations";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::MissingForwardCache: return "MissingForwardCache";
    case Errc::InvalidSteps: return "InvalidSteps";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::NonFiniteLoss: return "NonFiniteLoss";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::NonPositiveInput: return "NonPositiveInput";
    case Errc::EmptyComparisons: return "EmptyComparisons";
    case Errc::NoWinsForAnyMethod: return "NoWinsForAnyMethod";
    case Errc::NonPositivePi: return "NonPositivePi";
    case Errc::UnknownMethodName: return "UnknownMethodName";
    case Errc::NoValidSamples: return "NoValidSamples";
    case Errc::NonPositiveScale: return "NonPositiveScale";
    case Errc::InvalidParams: return "InvalidParams";
    case Errc::StrideTooLarge: return "StrideTooLarge";
    case Errc::MalformedHeader: return "MalformedHeader";
    case Errc::MalformedRecord: return "MalformedRecord";
    case Errc::NonFiniteValue: return "NonFiniteValue";
    case Errc::NonUnitQuaternion: return "NonUnitQuaternion";
    case Errc::CorruptCheckpoint: return "CorruptCheckpoint";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

/// Exception carrying one of the library's error kinds.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace resdiff
