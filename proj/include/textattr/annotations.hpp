#pragma once

#include <string>
#include <vector>

#include "textattr/evaluation.hpp"

namespace textattr {

// CSV with header y,y_hat,time_seconds: true class, annotator answer, and
// seconds spent. Extra columns are ignored.
std::vector<AnnotationRecord> load_annotations(const std::string& path);

}  // namespace textattr
