#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace gca::prompts {

namespace detail {
struct AssetEntry {
    const char* name;
    const char* text;
};
extern const AssetEntry kAssets[];
extern const unsigned long kAssetCount;
}  // namespace detail

// Returns the embedded template asset by name (file stem under
// assets/prompts/). Throws UnknownAsset.
std::string_view asset(std::string_view name);

std::vector<std::string> asset_names();

// Version string of the asset bundle (assets/prompts/VERSION).
std::string version();

// Replaces every "{key}" whose key appears in vars; unknown braces are left
// untouched, so literal JSON in templates survives substitution.
std::string fill(std::string_view tmpl, const std::map<std::string, std::string>& vars);

}  // namespace gca::prompts
