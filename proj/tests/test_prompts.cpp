#include <doctest.h>

#include "bp/prompts.hpp"
#include <stdexcept>

using namespace bp;

namespace {
struct Frontend {
  Tokenizer tok{16, 99};
  TextEncoder te{16, 32, 24, 99};
  Tensor e_null;
  Frontend() { e_null = te.encode(tok.embed("", 4)); }
};
}  // namespace

TEST_CASE("tokenizer vocabulary is fixed at 64 and rejects unknown symbols") {
  Tokenizer tok(8, 1);
  CHECK(tok.vocab().size() == 64);
  auto ids = tok.tokenize("REMOVE HAZE");
  REQUIRE(ids.size() == 2);
  CHECK(ids[0] != ids[1]);
  CHECK_THROWS_WITH_AS(tok.tokenize("REMOVE SMUDGE"), doctest::Contains("SMUDGE"),
                       std::invalid_argument);
}

TEST_CASE("embedding pads with <PAD> and is table-stable") {
  Tokenizer tok(8, 1);
  Tensor two = tok.embed("REMOVE HAZE", 4);
  CHECK(two.rows() == 4);
  CHECK(two.cols() == 8);
  Tensor pad = tok.embed("", 4);
  for (int d = 0; d < 8; ++d) {
    CHECK(two.at(2, d) == pad.at(0, d));  // padded tail equals <PAD> rows
    CHECK(two.at(3, d) == pad.at(1, d));
  }
  Tokenizer same(8, 1);
  CHECK(same.content_hash() == tok.content_hash());
  Tokenizer other(8, 2);
  CHECK(other.content_hash() != tok.content_hash());
}

TEST_CASE("text encoder is deterministic and shape-correct") {
  Frontend f;
  Tensor e = f.te.encode(f.tok.embed("REMOVE HAZE", 4));
  CHECK(e.rows() == 4);
  CHECK(e.cols() == 24);
  CHECK(e == f.te.encode(f.tok.embed("REMOVE HAZE", 4)));
}

TEST_CASE("encode: embedding prompt passes through unchanged") {
  Frontend f;
  Prompt p = make_embedding_prompt(DegradationKind::Veil, f.e_null);
  p.params.at("p")[3] = 17.5;
  Tensor ctx = encode_prompt(p, f.tok, f.te, f.e_null);
  CHECK(ctx == p.params.at("p"));
}

TEST_CASE("encode: residual with zero gate reproduces e_null bitwise") {
  Frontend f;
  Prompt p = make_residual_prompt(DegradationKind::Veil, 4, 24, 5);
  Tensor ctx = encode_prompt(p, f.tok, f.te, f.e_null);
  CHECK(ctx == f.e_null);
  // opening one gate changes the context
  p.params.at("g").at(1, 0) = 0.5;
  CHECK_FALSE(encode_prompt(p, f.tok, f.te, f.e_null) == f.e_null);
}

TEST_CASE("encode: token prompt equals text prompt when U = tau(c)") {
  Frontend f;
  Prompt text = make_text_prompt(DegradationKind::Veil, "REMOVE HAZE");
  Prompt token = make_token_prompt(DegradationKind::Veil, f.tok, 4, "REMOVE HAZE");
  Tensor a = encode_prompt(text, f.tok, f.te, f.e_null);
  Tensor b = encode_prompt(token, f.tok, f.te, f.e_null);
  CHECK(a == b);
}

TEST_CASE("trainable parameters per variant") {
  Frontend f;
  Prompt text = make_text_prompt(DegradationKind::Veil, "REMOVE HAZE");
  CHECK_THROWS_AS(trainable_parameters(text), std::invalid_argument);

  Prompt emb = make_embedding_prompt(DegradationKind::Veil, f.e_null);
  CHECK(trainable_parameters(emb).size() == 1);
  CHECK(trainable_parameters(emb).at("p").rows() == 4);
  CHECK(trainable_parameters(emb).at("p").cols() == 24);

  Prompt res = make_residual_prompt(DegradationKind::Veil, 4, 24, 5);
  CHECK(trainable_parameters(res).size() == 3);
  std::size_t res_count = 0;
  for (const auto& [name, t] : trainable_parameters(res)) res_count += t.size();
  CHECK(res_count == 4u * kResidualRank + kResidualRank * 24u + 4u);

  // at the default scale (L=8, D=32) the low-rank residual undercuts the
  // full embedding budget
  Prompt res_full = make_residual_prompt(DegradationKind::Veil, 8, 32, 5);
  std::size_t full_count = 0;
  for (const auto& [name, t] : trainable_parameters(res_full)) full_count += t.size();
  CHECK(full_count == 8u * kResidualRank + kResidualRank * 32u + 8u);
  CHECK(full_count < 8u * 32u);
}

TEST_CASE("prompt bank lookup lists available kinds on a miss") {
  Frontend f;
  PromptBank bank;
  bank.put(make_embedding_prompt(DegradationKind::Veil, f.e_null));
  CHECK(bank.has(DegradationKind::Veil));
  CHECK_FALSE(bank.has(DegradationKind::Blur));
  CHECK_THROWS_WITH_AS(bank.get(DegradationKind::Blur), doctest::Contains("veil"),
                       std::invalid_argument);
  // one prompt per kind: putting again replaces
  Prompt second = make_embedding_prompt(DegradationKind::Veil, f.e_null);
  second.params.at("p")[0] = 123.0;
  bank.put(second);
  CHECK(bank.entries().size() == 1);
  CHECK(bank.get(DegradationKind::Veil).params.at("p")[0] == 123.0);
}
