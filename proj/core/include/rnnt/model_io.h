#pragma once

#include <memory>
#include <string>

#include "rnnt/model.h"
#include "rnnt/toy_model.h"

namespace rnnt {

// Weight file: a JSON document with fields {feature_dim, subsample_factor,
// vocab, encoder, predictor, joiner}. Numeric payloads round-trip bit-exactly
// through save/load. Schema violations raise IoError naming the field path.

std::string serialize_model(const ToyModelData& data);
ToyModelData deserialize_model(const std::string& text);

void save_model(const ToyModelData& data, const std::string& path);
ToyModelData load_toy_data(const std::string& path);
TransducerModel load_model(const std::string& path);

}  // namespace rnnt
