// SPDX-License-Identifier: Apache-2.0
//
// Shared vocabulary types and the error hierarchy used across the r2m library.

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace r2m {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed JSON text.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Well-formed JSON that violates the configuration schema. `key()` names the
/// offending key path, e.g. "model.task".
class SchemaError : public Error {
public:
    SchemaError(std::string key, const std::string& what)
        : Error(key + ": " + what), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

class UnitError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

enum class Task { classification, detection, segmentation, keypoint };

inline constexpr Task kAllTasks[] = {Task::classification, Task::detection, Task::segmentation,
                                     Task::keypoint};

std::string_view to_string(Task task) noexcept;
std::optional<Task> task_from_string(std::string_view text) noexcept;

/// Metric reported by training for a task: accuracy, mAP, mIoU or OKS-mAP.
std::string_view metric_name_for(Task task) noexcept;

std::string to_lower(std::string_view text);
std::string trim(std::string_view text);

}  // namespace r2m
