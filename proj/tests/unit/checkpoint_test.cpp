#include <gtest/gtest.h>

#include <cstring>

#include "dalign/checkpoint.hpp"
#include "dalign/error.hpp"
#include "synthetic.hpp"

namespace dalign::nn {
namespace {

Dims dims() {
  Dims d;
  d.vocab = 20;
  d.d_model = 8;
  d.heads = 2;
  d.layers = 2;
  d.d_ff = 6;
  d.max_len = 12;
  return d;
}

const tok::SpecialIds kSpecials{17, 18, 19};

TEST(Checkpoint, RoundTripIsExact) {
  const ModelParams p = ModelParams::random(dims(), kSpecials, 21);
  const std::string bytes = serialize_checkpoint(p, {21, 0x0123456789abcdefULL});
  const Checkpoint back = deserialize_checkpoint(bytes);
  EXPECT_TRUE(back.params == p);
  EXPECT_EQ(back.header.seed, 21u);
  EXPECT_EQ(back.header.vocab_hash, 0x0123456789abcdefULL);
  EXPECT_EQ(serialize_checkpoint(back.params, back.header), bytes);
}

TEST(Checkpoint, LayoutIsHeaderThenLittleEndianArrays) {
  const ModelParams p = ModelParams::random(dims(), kSpecials, 22);
  const std::string bytes = serialize_checkpoint(p, {0, 1});
  const auto nl = bytes.find('\n');
  ASSERT_NE(nl, std::string::npos);
  const std::string header = bytes.substr(0, nl);
  EXPECT_NE(header.find("\"vocab_hash\":\"0000000000000001\""), std::string::npos);
  EXPECT_NE(header.find("\"token_embedding\""), std::string::npos);
  EXPECT_EQ(bytes.size() - nl - 1, p.parameter_count() * 8);
  // First payload value is token_embedding(0, 0).
  unsigned char raw[8];
  std::memcpy(raw, bytes.data() + nl + 1, 8);
  std::uint64_t u = 0;
  for (int i = 7; i >= 0; --i) u = u << 8 | raw[i];
  double v;
  std::memcpy(&v, &u, 8);
  EXPECT_EQ(v, p.token_embedding(0, 0));
}

TEST(Checkpoint, RejectsDamage) {
  const ModelParams p = ModelParams::random(dims(), kSpecials, 23);
  const std::string bytes = serialize_checkpoint(p, {0, 1});
  EXPECT_THROW(deserialize_checkpoint(bytes.substr(0, bytes.size() - 3)), ValidationError);
  EXPECT_THROW(deserialize_checkpoint(bytes + "x"), ValidationError);
  EXPECT_THROW(deserialize_checkpoint("not a checkpoint"), ValidationError);
  std::string wrong = bytes;
  wrong.replace(wrong.find("dalign-microformer"), 6, "foobar");
  EXPECT_THROW(deserialize_checkpoint(wrong), ValidationError);
}

TEST(Checkpoint, FileRoundTripAndMissingFile) {
  const auto dir = testing::fresh_dir("ckpt_unit");
  const ModelParams p = ModelParams::random(dims(), kSpecials, 24);
  save_checkpoint(dir / "m.ckpt", p, {5, 6});
  EXPECT_TRUE(load_checkpoint(dir / "m.ckpt").params == p);
  EXPECT_THROW(load_checkpoint(dir / "absent.ckpt"), IoError);
}

}  // namespace
}  // namespace dalign::nn
