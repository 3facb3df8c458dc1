#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gca/corpus.hpp"
#include "gca/simulator.hpp"

namespace gca {

struct TrainingMessage {
    std::string role;  // "user" | "assistant"
    std::string content;
    bool train_target = false;
};

struct TrainingSample {
    std::string kind;  // "actor" | "nsp" | "environment"
    std::string character;
    std::string system;
    std::vector<TrainingMessage> messages;
};

ordered_json sample_to_json(const TrainingSample& sample);

// One sample per character (minor roles included). The system prompt comes
// from a randomized template variant; other-character profiles, the plot
// summary and inner thoughts are each kept with probability toggle_prob.
// The character's own messages are the optimization targets; adjacent inputs
// are concatenated. Throws HeldOutLeak when the conversation is not from the
// train split.
std::vector<TrainingSample> build_actor_samples(const Conversation& conversation,
                                                const SceneContext& context,
                                                std::uint64_t rng_seed,
                                                double toggle_prob = 0.5,
                                                bool from_train_split = true);

// Next-speaker samples: for i in 0..T-1, the first i messages predict the
// speaker of message i+1, plus one end-of-conversation sample labeled
// "<END CHAT>".
std::vector<TrainingSample> build_nsp_samples(const Conversation& conversation);

// Environment samples: one per conversation containing Environment messages;
// those messages are the targets, everything else is input.
std::vector<TrainingSample> build_env_samples(const Conversation& conversation);

// Converts every train-split conversation of a book and writes JSONL records
// {kind, character, system, messages:[{role, content, train_target}]}.
// Returns the number of samples written.
std::size_t export_training_file(const BookRecord& book, std::uint64_t rng_seed,
                                 double toggle_prob, const std::string& out_path);

}  // namespace gca
