#include "rnnt/model_io.h"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace rnnt {
namespace {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows; ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols; ++c) row.push_back(m.at(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

const json& expect(const json& obj, const std::string& path, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw IoError(path + "." + key + ": missing field");
  return *it;
}

Matrix matrix_from_json(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw IoError(path + ": expected a non-empty array of rows");
  Matrix m;
  m.rows = static_cast<int>(j.size());
  m.cols = static_cast<int>(j[0].size());
  m.data.reserve(static_cast<size_t>(m.rows) * m.cols);
  for (size_t r = 0; r < j.size(); ++r) {
    const auto& row = j[r];
    if (!row.is_array() || static_cast<int>(row.size()) != m.cols) {
      throw IoError(path + "[" + std::to_string(r) + "]: ragged or non-array row");
    }
    for (const auto& v : row) {
      if (!v.is_number()) throw IoError(path + "[" + std::to_string(r) + "]: non-numeric entry");
      m.data.push_back(v.get<double>());
    }
  }
  return m;
}

std::vector<double> vector_from_json(const json& j, const std::string& path) {
  if (!j.is_array()) throw IoError(path + ": expected an array");
  std::vector<double> v;
  v.reserve(j.size());
  for (const auto& x : j) {
    if (!x.is_number()) throw IoError(path + ": non-numeric entry");
    v.push_back(x.get<double>());
  }
  return v;
}

json linear_encoder_to_json(const ToyModelData& d) {
  return json{{"type", "linear_recurrent"},
              {"dim", d.encoder_dim},
              {"left_rec", matrix_to_json(d.linear.enc_left_rec)},
              {"left_in", matrix_to_json(d.linear.enc_left_in)},
              {"right_rec", matrix_to_json(d.linear.enc_right_rec)},
              {"right_in", matrix_to_json(d.linear.enc_right_in)}};
}

json table_rows_to_json(const TableWeights& t) {
  json rows = json::array();
  for (const auto& [key, probs] : t.rows) {
    rows.push_back(json{{"t", key.first}, {"labels", key.second}, {"probs", probs}});
  }
  return rows;
}

}  // namespace

std::string serialize_model(const ToyModelData& data) {
  json j;
  j["feature_dim"] = data.feature_dim;
  j["subsample_factor"] = data.subsample_factor;
  json vocab = json::array();
  for (const auto& e : data.vocab) {
    vocab.push_back(json{{"id", e.id}, {"piece", e.piece}, {"is_blank", e.is_blank}});
  }
  j["vocab"] = std::move(vocab);

  if (data.family == ToyFamily::kLinearRecurrent) {
    j["encoder"] = linear_encoder_to_json(data);
    j["predictor"] = json{{"type", "linear_recurrent"},
                          {"dim", data.predictor_dim},
                          {"rec", matrix_to_json(data.linear.pred_rec)},
                          {"token_emb", matrix_to_json(data.linear.pred_token_emb)},
                          {"h0", data.linear.pred_h0}};
    j["joiner"] = json{{"type", "sum_relu_softmax"},
                       {"proj_audio", matrix_to_json(data.linear.join_proj_audio)},
                       {"proj_text", matrix_to_json(data.linear.join_proj_text)},
                       {"out", matrix_to_json(data.linear.join_out)},
                       {"bias", data.linear.join_bias}};
  } else {
    j["encoder"] = json{{"type", "passthrough"}};
    j["predictor"] = json{{"type", "prefix_hash"}, {"dim", data.predictor_dim}};
    j["joiner"] = json{{"type", "table"},
                       {"frames", data.table.table_frames},
                       {"prefix_depth", data.table.prefix_depth},
                       {"rows", table_rows_to_json(data.table)}};
  }
  return j.dump(2) + "\n";
}

ToyModelData deserialize_model(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw IoError(std::string("model file: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw IoError("model file: expected a JSON object");

  ToyModelData d;
  d.feature_dim = expect(j, "$", "feature_dim").get<int>();
  d.subsample_factor = expect(j, "$", "subsample_factor").get<int>();

  const auto& vocab = expect(j, "$", "vocab");
  if (!vocab.is_array()) throw IoError("vocab: expected an array");
  for (size_t i = 0; i < vocab.size(); ++i) {
    const std::string path = "vocab[" + std::to_string(i) + "]";
    const auto& e = vocab[i];
    Vocabulary::Entry entry;
    entry.id = expect(e, path, "id").get<int32_t>();
    entry.piece = expect(e, path, "piece").get<std::string>();
    entry.is_blank = expect(e, path, "is_blank").get<bool>();
    d.vocab.push_back(std::move(entry));
  }

  const auto& enc = expect(j, "$", "encoder");
  const auto& pred = expect(j, "$", "predictor");
  const auto& join = expect(j, "$", "joiner");
  const std::string enc_type = expect(enc, "encoder", "type").get<std::string>();

  if (enc_type == "linear_recurrent") {
    d.family = ToyFamily::kLinearRecurrent;
    d.encoder_dim = expect(enc, "encoder", "dim").get<int>();
    d.linear.enc_left_rec = matrix_from_json(expect(enc, "encoder", "left_rec"), "encoder.left_rec");
    d.linear.enc_left_in = matrix_from_json(expect(enc, "encoder", "left_in"), "encoder.left_in");
    d.linear.enc_right_rec =
        matrix_from_json(expect(enc, "encoder", "right_rec"), "encoder.right_rec");
    d.linear.enc_right_in =
        matrix_from_json(expect(enc, "encoder", "right_in"), "encoder.right_in");

    if (expect(pred, "predictor", "type").get<std::string>() != "linear_recurrent") {
      throw IoError("predictor.type: expected linear_recurrent to match encoder");
    }
    d.predictor_dim = expect(pred, "predictor", "dim").get<int>();
    d.linear.pred_rec = matrix_from_json(expect(pred, "predictor", "rec"), "predictor.rec");
    d.linear.pred_token_emb =
        matrix_from_json(expect(pred, "predictor", "token_emb"), "predictor.token_emb");
    d.linear.pred_h0 = vector_from_json(expect(pred, "predictor", "h0"), "predictor.h0");

    if (expect(join, "joiner", "type").get<std::string>() != "sum_relu_softmax") {
      throw IoError("joiner.type: expected sum_relu_softmax to match encoder");
    }
    d.linear.join_proj_audio =
        matrix_from_json(expect(join, "joiner", "proj_audio"), "joiner.proj_audio");
    d.linear.join_proj_text =
        matrix_from_json(expect(join, "joiner", "proj_text"), "joiner.proj_text");
    d.linear.join_out = matrix_from_json(expect(join, "joiner", "out"), "joiner.out");
    d.linear.join_bias = vector_from_json(expect(join, "joiner", "bias"), "joiner.bias");
  } else if (enc_type == "passthrough") {
    d.family = ToyFamily::kTableDriven;
    d.encoder_dim = d.feature_dim;
    if (expect(pred, "predictor", "type").get<std::string>() != "prefix_hash") {
      throw IoError("predictor.type: expected prefix_hash to match encoder");
    }
    d.predictor_dim = expect(pred, "predictor", "dim").get<int>();
    if (expect(join, "joiner", "type").get<std::string>() != "table") {
      throw IoError("joiner.type: expected table to match encoder");
    }
    d.table.table_frames = expect(join, "joiner", "frames").get<int64_t>();
    d.table.prefix_depth = expect(join, "joiner", "prefix_depth").get<int>();
    const auto& rows = expect(join, "joiner", "rows");
    if (!rows.is_array()) throw IoError("joiner.rows: expected an array");
    for (size_t i = 0; i < rows.size(); ++i) {
      const std::string path = "joiner.rows[" + std::to_string(i) + "]";
      const auto& r = rows[i];
      const int64_t t = expect(r, path, "t").get<int64_t>();
      LabelSeq labels;
      for (const auto& l : expect(r, path, "labels")) labels.push_back(l.get<int32_t>());
      auto probs = vector_from_json(expect(r, path, "probs"), path + ".probs");
      auto [it, inserted] =
          d.table.rows.emplace(std::make_pair(t, std::move(labels)), std::move(probs));
      if (!inserted) throw IoError(path + ": duplicate (t, labels) key");
    }
  } else {
    throw IoError("encoder.type: unknown type '" + enc_type + "'");
  }

  d.validate();
  return d;
}

void save_model(const ToyModelData& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << serialize_model(data);
  if (!out) throw IoError("write failed: " + path);
}

ToyModelData load_toy_data(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_model(buf.str());
}

TransducerModel load_model(const std::string& path) {
  return instantiate_model(std::make_shared<const ToyModelData>(load_toy_data(path)));
}

}  // namespace rnnt
