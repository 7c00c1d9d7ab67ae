#pragma once

#include "narx/multiclass.hpp"

#include <cstdint>
#include <string>

namespace narx {

inline constexpr int kModelFormatVersion = 1;

/// Reproducibility breadcrumbs carried inside the model file.
struct ModelProvenance {
    std::string config_hash;
    std::uint64_t seed = 0;
};

/// JSON text for a fitted classifier. Key order is fixed, so the same
/// model always serializes to the same bytes.
std::string model_to_json(const MultinomialNarxClassifier& clf,
                          const ModelProvenance& provenance = {});

/// Parses what `model_to_json` produced. Selection metadata that only
/// matters for training-time reports (CV curves, eliminations) is not
/// persisted; predictions and importance rankings survive the round
/// trip unchanged.
MultinomialNarxClassifier model_from_json(const std::string& text);

void save_model(const MultinomialNarxClassifier& clf, const std::string& path,
                const ModelProvenance& provenance = {});
MultinomialNarxClassifier load_model(const std::string& path);

ModelProvenance read_provenance(const std::string& path);

} // namespace narx
