#include "bp/prompts.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "bp/hash.hpp"
#include "bp/rng.hpp"

namespace bp {

namespace {

std::vector<std::string> build_vocab() {
  std::vector<std::string> v = {
      "<PAD>",    "REMOVE",  "RESTORE", "CLEAN",  "FIX",    "ENHANCE", "SHARPEN", "BRIGHTEN",
      "DENOISE",  "HAZE",    "VEIL",    "FOG",    "DARK",   "LOWLIGHT", "BLUR",   "STRIPE",
      "RAIN",     "NOISE",   "IMAGE",   "PICTURE", "SHAPE", "DISK",    "BAR",     "CROSS",
      "THE",      "THIS",    "FROM",    "MAKE",   "CLEAR",  "BRIGHT",  "SHARP",   "SMOOTH"};
  for (int i = static_cast<int>(v.size()); i < Tokenizer::kVocabSize; ++i) {
    std::ostringstream os;
    os << "TOK" << i;
    v.push_back(os.str());
  }
  return v;
}

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> words;
  std::istringstream is(text);
  std::string w;
  while (is >> w) words.push_back(w);
  return words;
}

std::uint64_t hash_tensor_map(const TensorMap& m) {
  Fnv1a h;
  for (const auto& [name, t] : m) {
    h.update(name);
    h.update_u32(static_cast<std::uint32_t>(t.rank()));
    for (int d : t.shape()) h.update_u32(static_cast<std::uint32_t>(d));
    for (std::size_t i = 0; i < t.size(); ++i) h.update_f32(static_cast<float>(t[i]));
  }
  return h.digest();
}

}  // namespace

Tokenizer::Tokenizer(int token_dim, std::uint64_t seed)
    : token_dim_(token_dim), vocab_(build_vocab()) {
  if (token_dim < 1) throw std::invalid_argument("Tokenizer: token_dim must be >= 1");
  for (int i = 0; i < kVocabSize; ++i) index_[vocab_[static_cast<std::size_t>(i)]] = i;
  Rng rng(hash_combine(seed, 0x70cab));
  table_ = rng.normal_tensor({kVocabSize, token_dim}, 1.0 / std::sqrt(token_dim));
}

std::vector<int> Tokenizer::tokenize(const std::string& text) const {
  std::vector<int> ids;
  for (const auto& w : split_words(text)) {
    auto it = index_.find(w);
    if (it == index_.end()) throw std::invalid_argument("Tokenizer: unknown symbol '" + w + "'");
    ids.push_back(it->second);
  }
  return ids;
}

Tensor Tokenizer::embed(const std::string& text, int length) const {
  if (length < 1) throw std::invalid_argument("Tokenizer: length must be >= 1");
  std::vector<int> ids = tokenize(text);
  ids.resize(static_cast<std::size_t>(length), 0);  // pad with <PAD>
  Tensor out({length, token_dim_});
  for (int l = 0; l < length; ++l)
    for (int d = 0; d < token_dim_; ++d) out.at(l, d) = table_.at(ids[static_cast<std::size_t>(l)], d);
  return out;
}

std::uint64_t Tokenizer::content_hash() const {
  TensorMap m;
  m.emplace("tokenizer.table", table_);
  return hash_tensor_map(m);
}

TextEncoder::TextEncoder(int in_dim, int hidden_dim, int out_dim, std::uint64_t seed)
    : in_dim_(in_dim), hidden_dim_(hidden_dim), out_dim_(out_dim) {
  if (in_dim < 1 || hidden_dim < 1 || out_dim < 1)
    throw std::invalid_argument("TextEncoder: dims must be >= 1");
  Rng rng(hash_combine(seed, 0x7e));
  w_.emplace("te.W1", rng.normal_tensor({in_dim, hidden_dim}, std::sqrt(2.0 / in_dim)));
  w_.emplace("te.b1", Tensor({1, hidden_dim}));
  w_.emplace("te.W2", rng.normal_tensor({hidden_dim, out_dim}, std::sqrt(1.0 / hidden_dim)));
  w_.emplace("te.b2", Tensor({1, out_dim}));
}

NodeId TextEncoder::build(Graph& g, NodeId tokens) const {
  NodeId w1 = g.input("te.W1");
  NodeId b1 = g.input("te.b1");
  NodeId w2 = g.input("te.W2");
  NodeId b2 = g.input("te.b2");
  NodeId h = g.relu(g.add(g.matmul(tokens, w1), b1));
  return g.add(g.matmul(h, w2), b2);
}

void TextEncoder::bind_weights(TensorMap& inputs) const {
  for (const auto& [name, t] : w_) inputs[name] = t;
}

Tensor TextEncoder::encode(const Tensor& token_embeddings) const {
  Graph g;
  NodeId tokens = g.input("tokens");
  NodeId out = build(g, tokens);
  TensorMap in;
  bind_weights(in);
  in["tokens"] = token_embeddings.row_matrix();
  return g.forward(out, in);
}

std::uint64_t TextEncoder::content_hash() const { return hash_tensor_map(w_); }

const char* variant_name(PromptVariant v) {
  switch (v) {
    case PromptVariant::Text: return "text";
    case PromptVariant::TokenSpace: return "token";
    case PromptVariant::EmbeddingSpace: return "embedding";
    case PromptVariant::Residual: return "residual";
  }
  return "?";
}

PromptVariant variant_from_name(const std::string& name) {
  if (name == "text") return PromptVariant::Text;
  if (name == "token") return PromptVariant::TokenSpace;
  if (name == "embedding") return PromptVariant::EmbeddingSpace;
  if (name == "residual") return PromptVariant::Residual;
  throw std::invalid_argument("unknown prompt variant '" + name +
                              "' (expected text, token, embedding or residual)");
}

std::string default_text_for(DegradationKind kind) {
  switch (kind) {
    case DegradationKind::Veil: return "REMOVE HAZE";
    case DegradationKind::LowLight: return "BRIGHTEN DARK";
    case DegradationKind::Blur: return "SHARPEN BLUR";
    case DegradationKind::Stripe: return "REMOVE STRIPE";
  }
  return "RESTORE IMAGE";
}

Prompt make_text_prompt(DegradationKind kind, const std::string& text) {
  Prompt p;
  p.variant = PromptVariant::Text;
  p.kind = kind;
  p.text = text;
  return p;
}

Prompt make_token_prompt(DegradationKind kind, const Tokenizer& tok, int length,
                         const std::string& init_text) {
  Prompt p;
  p.variant = PromptVariant::TokenSpace;
  p.kind = kind;
  p.text = init_text;
  p.params.emplace("U", tok.embed(init_text, length));
  return p;
}

Prompt make_embedding_prompt(DegradationKind kind, const Tensor& e_null) {
  Prompt p;
  p.variant = PromptVariant::EmbeddingSpace;
  p.kind = kind;
  p.params.emplace("p", e_null);  // start from null-context behavior
  return p;
}

Prompt make_residual_prompt(DegradationKind kind, int length, int context_dim,
                            std::uint64_t seed) {
  Prompt p;
  p.variant = PromptVariant::Residual;
  p.kind = kind;
  Rng rng(hash_combine(seed, 0x4e5));
  p.params.emplace("A", rng.normal_tensor({length, kResidualRank}, 0.1));
  p.params.emplace("B", rng.normal_tensor({kResidualRank, context_dim}, 0.1));
  p.params.emplace("g", Tensor({length, 1}));  // gate starts closed
  return p;
}

TensorMap& trainable_parameters(Prompt& prompt) {
  if (prompt.variant == PromptVariant::Text)
    throw std::invalid_argument("trainable_parameters: text prompts have no trainable tensors");
  return prompt.params;
}

const TensorMap& trainable_parameters(const Prompt& prompt) {
  if (prompt.variant == PromptVariant::Text)
    throw std::invalid_argument("trainable_parameters: text prompts have no trainable tensors");
  return prompt.params;
}

NodeId build_context(Graph& g, const Prompt& prompt, const Tokenizer& tok, const TextEncoder& te) {
  (void)tok;
  switch (prompt.variant) {
    case PromptVariant::Text: {
      NodeId tokens = g.input("prompt.tokens");  // frozen lookup, bound eagerly
      return te.build(g, tokens);
    }
    case PromptVariant::TokenSpace: {
      NodeId u = g.input("prompt.U", /*differentiable=*/true);
      return te.build(g, u);
    }
    case PromptVariant::EmbeddingSpace:
      return g.input("prompt.p", /*differentiable=*/true);
    case PromptVariant::Residual: {
      NodeId a = g.input("prompt.A", /*differentiable=*/true);
      NodeId b = g.input("prompt.B", /*differentiable=*/true);
      NodeId gate = g.input("prompt.g", /*differentiable=*/true);
      NodeId e_null = g.input("e_null");
      return g.add(e_null, g.mul(g.matmul(a, b), gate));
    }
  }
  throw std::invalid_argument("build_context: unknown variant");
}

void bind_context_inputs(TensorMap& inputs, const Prompt& prompt, const Tokenizer& tok,
                         const TextEncoder& te, const Tensor& e_null) {
  switch (prompt.variant) {
    case PromptVariant::Text:
      te.bind_weights(inputs);
      inputs["prompt.tokens"] = tok.embed(prompt.text, e_null.rows());
      break;
    case PromptVariant::TokenSpace:
      te.bind_weights(inputs);
      break;
    case PromptVariant::EmbeddingSpace:
      break;
    case PromptVariant::Residual:
      inputs["e_null"] = e_null;
      break;
  }
  for (const auto& [name, t] : prompt.params) inputs["prompt." + name] = t;
}

Tensor encode_prompt(const Prompt& prompt, const Tokenizer& tok, const TextEncoder& te,
                     const Tensor& e_null) {
  Graph g;
  NodeId ctx = build_context(g, prompt, tok, te);
  TensorMap inputs;
  bind_context_inputs(inputs, prompt, tok, te, e_null);
  return g.forward(ctx, inputs);
}

void PromptBank::put(Prompt prompt) { entries_[prompt.kind] = std::move(prompt); }

bool PromptBank::has(DegradationKind kind) const { return entries_.count(kind) > 0; }

const Prompt& PromptBank::get(DegradationKind kind) const {
  auto it = entries_.find(kind);
  if (it == entries_.end()) {
    std::string avail;
    for (const auto& [k, p] : entries_) {
      if (!avail.empty()) avail += ", ";
      avail += degradation_name(k);
    }
    throw std::invalid_argument(std::string("PromptBank: no prompt for kind '") +
                                degradation_name(kind) + "' (available: " +
                                (avail.empty() ? "none" : avail) + ")");
  }
  return it->second;
}

}  // namespace bp
