#pragma once

#include <string_view>
#include <vector>

namespace rcts::detail {

struct EmbeddedTemplate {
    std::string_view name;
    std::string_view content;
};

const std::vector<EmbeddedTemplate>& embedded_templates();

}  // namespace rcts::detail
