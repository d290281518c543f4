#include "hexar/resources.hpp"

#include <span>
#include <stdexcept>
#include <string>
#include <utility>

namespace hexar {

namespace detail {
std::span<const std::pair<std::string_view, std::string_view>> embedded_resources();
}  // namespace detail

std::string_view resource(std::string_view name) {
  for (const auto& [key, text] : detail::embedded_resources()) {
    if (key == name) return text;
  }
  throw std::out_of_range("unknown resource: " + std::string(name));
}

std::vector<std::string_view> resource_names() {
  std::vector<std::string_view> names;
  for (const auto& entry : detail::embedded_resources()) names.push_back(entry.first);
  return names;
}

}  // namespace hexar
