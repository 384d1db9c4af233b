#pragma once
#include <string>
#include <string_view>

namespace popsim {

/// @brief The competing readings of what D2 records
enum class DetectionModel { ci_collapse, unitary_coincidence, mwi_isolated_probe };

/// CLI spelling: ci-collapse | unitary-coincidence | mwi-isolated-probe
std::string to_string(DetectionModel m);
DetectionModel parse_detection_model(std::string_view s);

}  // namespace popsim
