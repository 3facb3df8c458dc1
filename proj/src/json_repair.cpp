#include "gca/json_repair.hpp"

#include "gca/prompts.hpp"
#include "gca/strings.hpp"

namespace gca {

namespace {

// Pulls the JSON document out of typical LLM replies: code fences, leading
// prose before the first brace, trailing commentary after the last one.
std::string_view isolate_json(std::string_view raw) {
    const size_t fence = raw.find("```");
    if (fence != std::string_view::npos) {
        size_t start = raw.find('\n', fence);
        if (start != std::string_view::npos) {
            ++start;
            const size_t end = raw.find("```", start);
            if (end != std::string_view::npos) return raw.substr(start, end - start);
        }
    }
    const size_t obj = raw.find('{');
    const size_t arr = raw.find('[');
    size_t begin = std::min(obj, arr);
    if (begin == std::string_view::npos) return raw;
    const char open = raw[begin];
    const char close = open == '{' ? '}' : ']';
    const size_t last = raw.rfind(close);
    if (last == std::string_view::npos || last < begin) return raw.substr(begin);
    return raw.substr(begin, last - begin + 1);
}

}  // namespace

std::optional<nlohmann::json> try_parse_json(std::string_view raw, std::string* error) {
    const std::string_view doc = isolate_json(raw);
    nlohmann::json parsed = nlohmann::json::parse(doc, nullptr, /*allow_exceptions=*/false);
    if (parsed.is_discarded()) {
        // reparse with exceptions for a real error message
        try {
            (void)nlohmann::json::parse(doc);
        } catch (const std::exception& e) {
            if (error) *error = e.what();
        }
        return std::nullopt;
    }
    return parsed;
}

nlohmann::json parse_json_with_repair(std::string_view raw, const SchemaCheck& schema_check,
                                      ChatBackend& repairer, const RepairOptions& opts,
                                      std::vector<RepairAttempt>* attempt_log) {
    auto attempt_parse = [&schema_check](std::string_view text,
                                         std::string* error) -> std::optional<nlohmann::json> {
        auto parsed = try_parse_json(text, error);
        if (!parsed) return std::nullopt;
        if (schema_check) {
            if (auto schema_error = schema_check(*parsed)) {
                if (error) *error = "schema: " + *schema_error;
                return std::nullopt;
            }
        }
        return parsed;
    };

    std::string error;
    if (auto parsed = attempt_parse(raw, &error)) return *parsed;

    std::vector<RepairAttempt> log;
    for (int round = 1; round <= opts.max_attempts; ++round) {
        ChatRequest req;
        req.system =
            prompts::fill(prompts::asset("json_repair"),
                          {{"error", error}, {"document", std::string(raw)}});
        req.params = opts.params;
        ChatResponse res = repairer.complete(req);

        RepairAttempt attempt;
        attempt.attempt = round;
        attempt.parse_error = error;
        attempt.candidate = res.content;
        log.push_back(attempt);
        if (attempt_log) attempt_log->push_back(attempt);

        if (auto parsed = attempt_parse(res.content, &error)) return *parsed;
    }
    throw RepairExhausted("JSON unrecoverable after " + std::to_string(opts.max_attempts) +
                              " repair attempts: " + error,
                          std::move(log));
}

SchemaCheck require_keys(std::vector<std::string> keys) {
    return [keys = std::move(keys)](const nlohmann::json& doc) -> std::optional<std::string> {
        if (!doc.is_object()) return "expected a JSON object";
        for (const auto& key : keys) {
            if (!doc.contains(key)) return "missing key '" + key + "'";
        }
        return std::nullopt;
    };
}

}  // namespace gca
