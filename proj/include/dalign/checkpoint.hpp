#pragma once

// Microformer checkpoint file:
//
//   line 1   JSON header terminated by '\n':
//            {"format":"dalign-microformer","version":1,
//             "dims":{"vocab":V,"d_model":d,"heads":H,"layers":M,"d_ff":F,"max_len":J},
//             "specials":{"bos":..,"eos":..,"pad":..},
//             "seed":S,"vocab_hash":"<16 hex digits>",
//             "arrays":[{"name":"token_embedding","rows":V,"cols":d},...]}
//   rest     the arrays listed in "arrays", in that order, each row-major as
//            little-endian IEEE-754 binary64, with nothing in between.
//
// Array order: token_embedding, position_embedding, then for each layer m
// (1-based) layer<m>.{wq,wk,wv,wo,ln1_gain,ln1_bias,w1,b1,w2,b2,ln2_gain,
// ln2_bias}, then classifier, classifier_bias.

#include <cstdint>
#include <filesystem>
#include <string>

#include "dalign/microformer.hpp"

namespace dalign::nn {

struct CheckpointHeader {
  std::uint64_t seed = 0;
  std::uint64_t vocab_hash = 0;
};

struct Checkpoint {
  CheckpointHeader header;
  ModelParams params;
};

std::string serialize_checkpoint(const ModelParams& params, const CheckpointHeader& header);
Checkpoint deserialize_checkpoint(const std::string& bytes);

// Throw IoError when the file cannot be written or read, ValidationError when
// the content is malformed.
void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const CheckpointHeader& header);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace dalign::nn
