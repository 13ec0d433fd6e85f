#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bp/graph.hpp"
#include "bp/toyworld.hpp"

namespace bp {

// Fixed 64-word vocabulary with a frozen embedding table. "Text" prompts
// are short symbol strings over this vocabulary ("REMOVE HAZE"); sequences
// are padded with <PAD> to the requested length.
class Tokenizer {
 public:
  static constexpr int kVocabSize = 64;

  Tokenizer(int token_dim, std::uint64_t seed);

  int token_dim() const { return token_dim_; }
  const std::vector<std::string>& vocab() const { return vocab_; }
  std::vector<int> tokenize(const std::string& text) const;  // unknown symbol -> error
  Tensor embed(const std::string& text, int length) const;   // [length, token_dim]
  const Tensor& table() const { return table_; }
  std::uint64_t content_hash() const;

 private:
  int token_dim_;
  std::vector<std::string> vocab_;
  std::map<std::string, int> index_;
  Tensor table_;  // [64, token_dim]
};

// Frozen two-layer token-wise MLP mapping [L, D_in] -> [L, D].
class TextEncoder {
 public:
  TextEncoder(int in_dim, int hidden_dim, int out_dim, std::uint64_t seed);

  int in_dim() const { return in_dim_; }
  int out_dim() const { return out_dim_; }
  const TensorMap& weights() const { return w_; }

  Tensor encode(const Tensor& token_embeddings) const;

  // In-graph version for gradient flow through the frozen weights; leaves
  // are named "te.*" and must be bound via bind_weights.
  NodeId build(Graph& g, NodeId tokens) const;
  void bind_weights(TensorMap& inputs) const;

  std::uint64_t content_hash() const;

 private:
  int in_dim_, hidden_dim_, out_dim_;
  TensorMap w_;
};

enum class PromptVariant { Text, TokenSpace, EmbeddingSpace, Residual };

const char* variant_name(PromptVariant v);
PromptVariant variant_from_name(const std::string& name);

// One conditioning record. Exactly one parameterization is populated:
//   Text           reference string, nothing trainable
//   TokenSpace     params["U"]            [L, D_in], fed through the encoder
//   EmbeddingSpace params["p"]            [L, D], used directly
//   Residual       params["A","B","g"]    context = e_null + g (x) (A*B),
//                  g per-token gates [L,1] initialized to zero
struct Prompt {
  PromptVariant variant = PromptVariant::EmbeddingSpace;
  DegradationKind kind = DegradationKind::Veil;
  std::string text;
  TensorMap params;
};

inline constexpr int kResidualRank = 4;

std::string default_text_for(DegradationKind kind);

Prompt make_text_prompt(DegradationKind kind, const std::string& text);
Prompt make_token_prompt(DegradationKind kind, const Tokenizer& tok, int length,
                         const std::string& init_text);
Prompt make_embedding_prompt(DegradationKind kind, const Tensor& e_null);
Prompt make_residual_prompt(DegradationKind kind, int length, int context_dim, std::uint64_t seed);

// The tensors gradient descent may touch; Text has none and is an error.
TensorMap& trainable_parameters(Prompt& prompt);
const TensorMap& trainable_parameters(const Prompt& prompt);

// Context construction as a graph; trainable leaves are named
// "prompt.<param>" and marked differentiable. Frozen encoder weights and
// e_null enter as plain inputs.
NodeId build_context(Graph& g, const Prompt& prompt, const Tokenizer& tok, const TextEncoder& te);
// Binds everything except the trainable leaves themselves.
void bind_context_inputs(TensorMap& inputs, const Prompt& prompt, const Tokenizer& tok,
                         const TextEncoder& te, const Tensor& e_null);

// Eager evaluation of the same construction.
Tensor encode_prompt(const Prompt& prompt, const Tokenizer& tok, const TextEncoder& te,
                     const Tensor& e_null);

class PromptBank {
 public:
  void put(Prompt prompt);  // replaces any existing entry for the kind
  bool has(DegradationKind kind) const;
  const Prompt& get(DegradationKind kind) const;  // error lists available kinds
  const std::map<DegradationKind, Prompt>& entries() const { return entries_; }

 private:
  std::map<DegradationKind, Prompt> entries_;
};

}  // namespace bp
