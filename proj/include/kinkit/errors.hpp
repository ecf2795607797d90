// Copyright 2026-present the kinkit project
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

namespace kinkit {

// Every failure the toolkit can raise carries a stable machine-readable kind.
// The CLI renders these as a single line: "ERROR <kind>: <detail>".
namespace errkind {
inline constexpr std::string_view ZeroVector = "ZeroVector";
inline constexpr std::string_view DimensionMismatch = "DimensionMismatch";
inline constexpr std::string_view EmptyBatch = "EmptyBatch";
inline constexpr std::string_view LabelOutOfRange = "LabelOutOfRange";
inline constexpr std::string_view NearSingular = "NearSingular";
inline constexpr std::string_view NonFiniteValue = "NonFiniteValue";
inline constexpr std::string_view NonFiniteLoss = "NonFiniteLoss";
inline constexpr std::string_view InsufficientClasses = "InsufficientClasses";
inline constexpr std::string_view GradientCheckFailed = "GradientCheckFailed";
inline constexpr std::string_view SingleClass = "SingleClass";
inline constexpr std::string_view EmptyCalibration = "EmptyCalibration";
inline constexpr std::string_view UnknownImageId = "UnknownImageId";
inline constexpr std::string_view MissingCalibration = "MissingCalibration";
inline constexpr std::string_view MissingClassifier = "MissingClassifier";
inline constexpr std::string_view MissingLabel = "MissingLabel";
inline constexpr std::string_view EmptyInput = "EmptyInput";
inline constexpr std::string_view NoRelevant = "NoRelevant";
inline constexpr std::string_view MalformedHeader = "MalformedHeader";
inline constexpr std::string_view MalformedRow = "MalformedRow";
inline constexpr std::string_view InconsistentDimension = "InconsistentDimension";
inline constexpr std::string_view DuplicateId = "DuplicateId";
inline constexpr std::string_view InvalidLabel = "InvalidLabel";
inline constexpr std::string_view NonContiguousGalleryIndex = "NonContiguousGalleryIndex";
inline constexpr std::string_view InvalidConfig = "InvalidConfig";
inline constexpr std::string_view IoFailure = "IoFailure";
}  // namespace errkind

class Error : public std::runtime_error {
public:
    Error(std::string_view kind, const std::string& detail)
        : std::runtime_error(detail), kind_(kind) {}

    std::string_view kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

}  // namespace kinkit
