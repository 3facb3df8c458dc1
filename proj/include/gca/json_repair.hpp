#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "gca/errors.hpp"
#include "gca/gateway.hpp"

namespace gca {

// Returns an error description when the document does not fit, nullopt when
// it does.
using SchemaCheck = std::function<std::optional<std::string>(const nlohmann::json&)>;

struct RepairOptions {
    int max_attempts = 5;  // repair rounds after the initial parse
    ChatParams params;     // forwarded to the repair completion
};

// Strips code fences / surrounding prose and parses the first JSON document
// found. Returns nullopt with `error` set on failure.
std::optional<nlohmann::json> try_parse_json(std::string_view raw, std::string* error);

// Parses `raw`, validating with `schema_check`. On failure, asks `repairer`
// to fix the document (one repair completion per failed parse) and retries,
// restarting from the original document each round, for at most
// opts.max_attempts rounds. Throws RepairExhausted with the attempt log once
// the rounds are used up.
nlohmann::json parse_json_with_repair(std::string_view raw, const SchemaCheck& schema_check,
                                      ChatBackend& repairer, const RepairOptions& opts = {},
                                      std::vector<RepairAttempt>* attempt_log = nullptr);

// Convenience check: every listed key must be present in a JSON object.
SchemaCheck require_keys(std::vector<std::string> keys);

}  // namespace gca
