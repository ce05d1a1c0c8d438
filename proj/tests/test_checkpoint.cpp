#include <gtest/gtest.h>

#include <cstring>
#include <fstream>
#include <iterator>

#include "support.hpp"
#include "vitreg/checkpoint.hpp"
#include "vitreg/error.hpp"

namespace vitreg {
namespace {

using testing::random_image;
using testing::TempDir;

std::string read_all(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_all(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream(p, std::ios::binary) << bytes;
}

std::string checkpoint_error(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kCheckpoint) << e.what();
    return e.what();
  }
  ADD_FAILURE() << "no error thrown";
  return "";
}

VitWeights perturbed_toy(std::uint64_t seed) {
  VitWeights w = init_weights(VitConfig::toy(), seed);
  Rng rng(seed);
  for (float& v : w.values) v += static_cast<float>(rng.uniform(-0.2, 0.2));
  // Values whose bit patterns a text round trip would lose.
  w.values[0] = -0.0f;
  w.values[1] = 1e-40f;
  w.values[2] = 0.1f;
  return w;
}

TEST(Checkpoint, RoundTripIsBitIdentical) {
  TempDir dir("ckpt");
  const VitWeights w = perturbed_toy(3);
  const nlohmann::json meta{{"epoch", 4}, {"note", "x"}};
  save_checkpoint(w, dir / "a.ckpt", meta);
  const LoadedCheckpoint back = load_checkpoint(dir / "a.ckpt");
  EXPECT_EQ(back.weights.config, w.config);
  EXPECT_EQ(back.meta, meta);
  ASSERT_EQ(back.weights.values.size(), w.values.size());
  EXPECT_EQ(std::memcmp(back.weights.values.data(), w.values.data(), w.values.size() * sizeof(float)), 0);

  Rng rng(8);
  std::vector<Image> batch;
  for (int i = 0; i < 3; ++i) batch.push_back(random_image(32, 32, 3, rng, -1, 1));
  const auto a = forward(w, batch);
  const auto b = forward(back.weights, batch);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].p_left, b[i].p_left);
    EXPECT_EQ(a[i].p_right, b[i].p_right);
  }

  // Saving the loaded weights reproduces the file byte for byte.
  save_checkpoint(back.weights, dir / "b.ckpt", back.meta);
  EXPECT_EQ(read_all(dir / "a.ckpt"), read_all(dir / "b.ckpt"));
  EXPECT_EQ(read_all(dir / "a.ckpt").substr(0, 8), "VITRGCK1");

  const VitWeights typed = load_weights(w.config, dir / "a.ckpt");
  EXPECT_EQ(typed.values, back.weights.values);
}

TEST(Checkpoint, MismatchedWidthNamesTheTensor) {
  TempDir dir("ckpt");
  save_checkpoint(init_weights(VitConfig::toy(), 1), dir / "a.ckpt");
  VitConfig wider = VitConfig::toy();
  wider.embed_dim *= 2;
  wider.mlp_hidden *= 2;
  const std::string msg = checkpoint_error([&] { load_weights(wider, dir / "a.ckpt"); });
  EXPECT_NE(msg.find("patch_embed.weight"), std::string::npos) << msg;
  EXPECT_NE(msg.find(std::to_string(wider.embed_dim)), std::string::npos) << msg;

  VitConfig deeper = VitConfig::toy();
  deeper.depth += 1;
  EXPECT_NE(checkpoint_error([&] { load_weights(deeper, dir / "a.ckpt"); }).find("blocks.2"), std::string::npos);

  VitConfig gelu_off = VitConfig::toy();
  gelu_off.head_activation = HeadActivation::kIdentity;
  EXPECT_NE(checkpoint_error([&] { load_weights(gelu_off, dir / "a.ckpt"); }).find("config"), std::string::npos);
}

TEST(Checkpoint, CorruptFilesAreRejected) {
  TempDir dir("ckpt");
  save_checkpoint(init_weights(VitConfig::toy(), 2), dir / "a.ckpt");
  const std::string good = read_all(dir / "a.ckpt");

  write_all(dir / "trunc.ckpt", good.substr(0, good.size() - 3));
  EXPECT_NE(checkpoint_error([&] { load_checkpoint(dir / "trunc.ckpt"); }).find("truncated"), std::string::npos);

  write_all(dir / "trail.ckpt", good + "x");
  EXPECT_NE(checkpoint_error([&] { load_checkpoint(dir / "trail.ckpt"); }).find("trailing"), std::string::npos);

  std::string bad_magic = good;
  bad_magic[0] = 'X';
  write_all(dir / "magic.ckpt", bad_magic);
  checkpoint_error([&] { load_checkpoint(dir / "magic.ckpt"); });

  write_all(dir / "short.ckpt", good.substr(0, 12));
  checkpoint_error([&] { load_checkpoint(dir / "short.ckpt"); });

  std::string huge_len = good;
  huge_len[15] = '\x7f';
  write_all(dir / "len.ckpt", huge_len);
  checkpoint_error([&] { load_checkpoint(dir / "len.ckpt"); });

  checkpoint_error([&] { load_checkpoint(dir / "missing.ckpt"); });
}

}  // namespace
}  // namespace vitreg
