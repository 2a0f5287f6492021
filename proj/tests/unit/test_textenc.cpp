// Copyright (c) 2026 The geotag Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "geotag/numerics/optim.hpp"
#include "geotag/textenc/encoder.hpp"

using namespace geotag::textenc;
using namespace geotag::numerics;

namespace {

EncoderConfig tiny_config() {
  EncoderConfig cfg;
  cfg.layers = 2;
  cfg.heads = 2;
  cfg.hidden = 8;
  cfg.ff = 16;
  cfg.dropout = 0.0;
  cfg.max_len = 12;
  return cfg;
}

std::vector<std::string> tokens_of(const TokenSeq& seq, const Vocab& v) {
  std::vector<std::string> out;
  for (int id : seq.ids) out.push_back(v.token(id));
  return out;
}

}  // namespace

TEST_CASE("build_vocab orders by frequency then lexicographically") {
  Vocab v = build_vocab({"a b", "b c"}, 10);
  CHECK(v.tokens() == std::vector<std::string>{"[PAD]", "[UNK]", "[CLS]", "b", "a", "c"});
  Vocab capped = build_vocab({"a b", "b c"}, 4);
  CHECK(capped.tokens() == std::vector<std::string>{"[PAD]", "[UNK]", "[CLS]", "b"});
  Vocab empty = build_vocab({}, 10);
  CHECK(empty.size() == 3);
  CHECK_THROWS_AS(build_vocab({"a"}, 2), std::invalid_argument);
}

TEST_CASE("tokenize normalization, truncation and unknown tokens") {
  Vocab v = build_vocab({"hello , world"}, 100);
  CHECK(tokens_of(tokenize("Hello, WORLD", v, 100), v) ==
        std::vector<std::string>{"[CLS]", "hello", ",", "world"});

  std::string long_text;
  std::vector<std::string> corpus;
  for (int i = 0; i < 200; ++i) long_text += "t" + std::to_string(i) + " ";
  Vocab big = build_vocab({long_text}, 1000);
  TokenSeq seq = tokenize(long_text, big, 100);
  REQUIRE(seq.size() == 100);
  CHECK(seq.ids[0] == Vocab::kCls);
  CHECK(big.token(seq.ids[1]) == "t0");
  CHECK(big.token(seq.ids[99]) == "t98");

  TokenSeq unk = tokenize("hello planet", v, 10);
  CHECK(unk.ids[2] == Vocab::kUnk);
  CHECK(std::all_of(unk.mask.begin(), unk.mask.end(), [](auto m) { return m == 1; }));
}

TEST_CASE("tokenize is idempotent on its normalized output") {
  std::mt19937_64 rng(4);
  const std::string alphabet = "abcXYZ019 ,.!?-'#@\t";
  for (int trial = 0; trial < 200; ++trial) {
    std::string text;
    const int len = static_cast<int>(rng() % 30);
    for (int i = 0; i < len; ++i) text.push_back(alphabet[rng() % alphabet.size()]);
    auto once = normalize_tokens(text);
    std::string joined;
    for (const auto& t : once) joined += t + " ";
    CHECK(normalize_tokens(joined) == once);
  }
}

TEST_CASE("pad_batch pads with [PAD] and clears the mask") {
  Vocab v = build_vocab({"a b c"}, 10);
  auto batch = pad_batch({tokenize("a", v, 10), tokenize("a b c", v, 10)});
  CHECK(batch[0].ids == std::vector<int>{Vocab::kCls, v.id("a"), Vocab::kPad, Vocab::kPad});
  CHECK(batch[0].mask == std::vector<std::uint8_t>{1, 1, 0, 0});
  CHECK(batch[1].mask == std::vector<std::uint8_t>{1, 1, 1, 1});
}

TEST_CASE("vocab file round trip") {
  Vocab v = build_vocab({"zeta alpha alpha", "beta"}, 10);
  auto path = std::filesystem::temp_directory_path() / "geotag_vocab_test.txt";
  v.save(path);
  CHECK(Vocab::load(path) == v);
  std::filesystem::remove(path);
}

TEST_CASE("embed_sequence") {
  ParameterSet ps;
  std::mt19937_64 rng(1);
  EncoderConfig cfg = tiny_config();
  TextEncoder enc(ps, cfg, 10, rng);
  TokenSeq seq{{2, 5, 7, 5}, {1, 1, 1, 1}};
  {
    Graph g;
    Var e = enc.embed(g, seq);
    CHECK(e.shape() == Shape{4, 8});
    // Same token at two positions differs because the position rows differ.
    bool differ = false;
    for (std::size_t j = 0; j < 8; ++j) differ = differ || e.value().at(1, j) != e.value().at(3, j);
    CHECK(differ);
  }
  ps.get("text.position_emb").value.fill(0.0);
  ps.get("text.segment_emb").value.fill(0.0);
  Graph g;
  Var e = enc.embed(g, seq);
  for (std::size_t j = 0; j < 8; ++j) CHECK(e.value().at(1, j) == e.value().at(3, j));

  TokenSeq bad{{2, 10}, {1, 1}};
  CHECK_THROWS_AS(enc.embed(g, bad), std::out_of_range);
  TokenSeq too_long{std::vector<int>(13, 3), std::vector<std::uint8_t>(13, 1)};
  CHECK_THROWS_AS(enc.embed(g, too_long), std::out_of_range);
}

TEST_CASE("encode_text shapes, masking and the CLS fast path") {
  ParameterSet ps;
  std::mt19937_64 rng(2);
  TextEncoder enc(ps, tiny_config(), 10, rng);
  TokenSeq seq{{2, 4, 6, 3}, {1, 1, 1, 1}};
  Graph g;
  std::vector<Var> attention;
  EncodedText out = enc.encode(g, seq, &attention);
  CHECK(out.hidden.shape() == Shape{4, 8});
  CHECK(out.cls.value().size() == 8);
  for (std::size_t j = 0; j < 8; ++j) CHECK(out.cls.value()[j] == out.hidden.value().at(0, j));

  Var fast = enc.encode_cls(g, seq);
  CHECK(fast.value().storage() == out.cls.value().storage());

  TokenSeq padded = seq;
  padded.ids.insert(padded.ids.end(), {0, 0, 0});
  padded.mask.insert(padded.mask.end(), {0, 0, 0});
  std::vector<Var> padded_attention;
  EncodedText out_pad = enc.encode(g, padded, &padded_attention);
  for (std::size_t j = 0; j < 8; ++j) CHECK(std::abs(out_pad.cls.value()[j] - out.cls.value()[j]) <= 1e-9);

  // Attention rows are distributions over unmasked keys only.
  REQUIRE(padded_attention.size() == 4);  // 2 layers x 2 heads
  for (const auto& a : padded_attention) {
    for (std::size_t i = 0; i < a.value().rows(); ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < a.value().cols(); ++j) {
        if (!padded.mask[j]) CHECK(a.value().at(i, j) == 0.0);
        sum += a.value().at(i, j);
      }
      CHECK(std::abs(sum - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("different seeds give different CLS vectors") {
  TokenSeq seq{{2, 4, 6}, {1, 1, 1}};
  auto cls_for = [&](std::uint64_t seed) {
    ParameterSet ps;
    std::mt19937_64 rng(seed);
    TextEncoder enc(ps, tiny_config(), 10, rng);
    Graph g;
    return enc.encode_cls(g, seq).value().storage();
  };
  CHECK(cls_for(1) != cls_for(2));
  CHECK(cls_for(1) == cls_for(1));
}

TEST_CASE("encoder gradients") {
  ParameterSet ps;
  std::mt19937_64 rng(3);
  EncoderConfig cfg = tiny_config();
  TextEncoder enc(ps, cfg, 6, rng);
  // Larger weights than the default init so attention is far from uniform.
  for (auto& p : ps)
    if (p.name.find("attn.w") != std::string::npos || p.name.find("ff.w") != std::string::npos)
      for (auto& v : p.value.storage()) v *= 20.0;
  TokenSeq seq{{2, 4}, {1, 1}};
  Tensor probe = Tensor::uniform({1, 8}, -1.0, 1.0, rng);
  auto build = [&](Graph& g) { return mean(mul(enc.encode_cls(g, seq), g.constant(probe))); };
  CHECK(grad_check(ps, build) <= 1e-4);

  ps.zero_grad();
  Graph g;
  g.backward(build(g));
  auto any_nonzero = [](const Tensor& t) {
    return std::any_of(t.storage().begin(), t.storage().end(), [](double v) { return v != 0.0; });
  };
  CHECK(any_nonzero(ps.get("text.token_emb").grad));
  CHECK(any_nonzero(ps.get("text.position_emb").grad));
  CHECK(any_nonzero(ps.get("text.layer0.attn.wq").grad));
  CHECK(any_nonzero(ps.get("text.layer1.ff.w2").grad));
}

TEST_CASE("CLS is sensitive to token order on a trained instance") {
  ParameterSet ps;
  std::mt19937_64 rng(9);
  EncoderConfig cfg = tiny_config();
  TextEncoder enc(ps, cfg, 8, rng);
  TokenSeq a{{2, 4, 5, 6}, {1, 1, 1, 1}};
  TokenSeq b{{2, 6, 5, 4}, {1, 1, 1, 1}};
  // A few Adam steps pulling the two orderings towards different targets.
  AdamState st;
  st.options.lr = 1e-2;
  Tensor ta = Tensor::uniform({1, 8}, -1.0, 1.0, rng);
  for (int step = 0; step < 20; ++step) {
    ps.zero_grad();
    Graph g;
    g.backward(mean(mul(enc.encode_cls(g, a), g.constant(ta))));
    adam_step(ps, st);
  }
  Graph g;
  auto ca = enc.encode_cls(g, a).value().storage();
  auto cb = enc.encode_cls(g, b).value().storage();
  bool differ = false;
  for (std::size_t j = 0; j < ca.size(); ++j) differ = differ || std::abs(ca[j] - cb[j]) > 1e-12;
  CHECK(differ);
}

TEST_CASE("encoder config validation") {
  EncoderConfig cfg;
  cfg.hidden = 130;
  cfg.heads = 4;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = EncoderConfig{};
  CHECK_NOTHROW(cfg.validate());
}
