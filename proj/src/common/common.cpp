// SPDX-License-Identifier: Apache-2.0

#include "r2m/common.hpp"

#include <algorithm>
#include <cctype>

namespace r2m {

std::string_view to_string(Task task) noexcept {
    switch (task) {
        case Task::classification: return "classification";
        case Task::detection: return "detection";
        case Task::segmentation: return "segmentation";
        case Task::keypoint: return "keypoint";
    }
    return "classification";
}

std::optional<Task> task_from_string(std::string_view text) noexcept {
    for (Task t : kAllTasks) {
        if (to_string(t) == text) return t;
    }
    return std::nullopt;
}

std::string_view metric_name_for(Task task) noexcept {
    switch (task) {
        case Task::classification: return "accuracy";
        case Task::detection: return "mAP";
        case Task::segmentation: return "mIoU";
        case Task::keypoint: return "OKS-mAP";
    }
    return "accuracy";
}

std::string to_lower(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string trim(std::string_view text) {
    auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    std::size_t b = 0;
    std::size_t e = text.size();
    while (b < e && is_space(static_cast<unsigned char>(text[b]))) ++b;
    while (e > b && is_space(static_cast<unsigned char>(text[e - 1]))) --e;
    return std::string(text.substr(b, e - b));
}

}  // namespace r2m
