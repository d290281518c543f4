#pragma once

#include <string_view>
#include <vector>

namespace hexar {

// Text resources compiled into the library (prompt templates, the classifier
// keyword table, the pizza recipe dataset). Throws std::out_of_range for an
// unknown name.
std::string_view resource(std::string_view name);

std::vector<std::string_view> resource_names();

}  // namespace hexar
