#include "gca/prompts.hpp"

#include <cctype>

#include "gca/errors.hpp"
#include "gca/strings.hpp"

namespace gca::prompts {

std::string_view asset(std::string_view name) {
    for (unsigned long i = 0; i < detail::kAssetCount; ++i) {
        if (name == detail::kAssets[i].name) return detail::kAssets[i].text;
    }
    throw UnknownAsset("unknown prompt asset: " + std::string(name));
}

std::vector<std::string> asset_names() {
    std::vector<std::string> out;
    for (unsigned long i = 0; i < detail::kAssetCount; ++i)
        out.emplace_back(detail::kAssets[i].name);
    return out;
}

std::string version() {
    return trim(asset("VERSION"));
}

std::string fill(std::string_view tmpl, const std::map<std::string, std::string>& vars) {
    std::string out;
    out.reserve(tmpl.size());
    size_t i = 0;
    while (i < tmpl.size()) {
        const char c = tmpl[i];
        if (c != '{') {
            out.push_back(c);
            ++i;
            continue;
        }
        const size_t close = tmpl.find('}', i + 1);
        if (close == std::string_view::npos) {
            out.append(tmpl.substr(i));
            break;
        }
        const std::string key(tmpl.substr(i + 1, close - i - 1));
        auto it = vars.find(key);
        if (it == vars.end()) {
            out.push_back('{');
            ++i;
            continue;
        }
        out.append(it->second);
        i = close + 1;
    }
    return out;
}

}  // namespace gca::prompts
