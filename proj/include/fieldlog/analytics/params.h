#pragma once

#include <map>
#include <string>

#include "fieldlog/analytics/anomaly.h"
#include "fieldlog/analytics/export.h"
#include "fieldlog/analytics/query.h"

namespace fieldlog::analytics {

// Text parameters shared by the HTTP query string and the command line.
using Params = std::map<std::string, std::string>;

// user, from, to, zone, keyword, subject, min_importance
MessageFilter parse_message_filter(const Params& params);
// stream, zone, from, to
ReadingFilter parse_reading_filter(const Params& params);
// delta_threshold, delta_window, level_low, level_high override `base`.
DetectorParams parse_detector_overrides(DetectorParams base, const Params& params);

double parse_number(const std::string& text, const std::string& field);

}  // namespace fieldlog::analytics
