#include "bp/persist.hpp"

#include <sstream>
#include <stdexcept>

namespace bp {

namespace {

// meta.config lanes; all values are small integers, exact in f32
enum MetaIndex {
  kSide,
  kHiddenDim,
  kHiddenLayers,
  kContextTokens,
  kContextDim,
  kTimeDim,
  kAttnDim,
  kEncoderHidden,
  kTokenDim,
  kMetaCount
};

}  // namespace

void save_backbone(const std::filesystem::path& path, const Backbone& backbone, int token_dim,
                   int encoder_hidden) {
  if (!backbone.frozen()) throw std::logic_error("save_backbone: backbone must be frozen");
  TensorMap out = backbone.weights();
  const BackboneConfig& c = backbone.config();
  Tensor meta({kMetaCount});
  meta[kSide] = c.side;
  meta[kHiddenDim] = c.hidden_dim;
  meta[kHiddenLayers] = c.hidden_layers;
  meta[kContextTokens] = c.context_tokens;
  meta[kContextDim] = c.context_dim;
  meta[kTimeDim] = c.time_dim;
  meta[kAttnDim] = c.attn_dim;
  meta[kEncoderHidden] = encoder_hidden;
  meta[kTokenDim] = token_dim;
  out.emplace("meta.config", std::move(meta));
  out.emplace("meta.seed", pack_u64(c.seed));
  out.emplace("meta.frozen_hash", pack_u64(backbone.frozen_hash()));
  save_checkpoint(path, out);
}

BackboneBundle load_backbone(const std::filesystem::path& path) {
  TensorMap in = load_checkpoint(path);
  auto take = [&in, &path](const std::string& name) {
    auto it = in.find(name);
    if (it == in.end())
      throw std::runtime_error("load_backbone: '" + path.string() + "' lacks tensor '" + name + "'");
    Tensor t = std::move(it->second);
    in.erase(it);
    return t;
  };
  const Tensor meta = take("meta.config");
  if (meta.size() != kMetaCount) throw std::runtime_error("load_backbone: bad meta.config");
  const std::uint64_t seed = unpack_u64(take("meta.seed"));
  const std::uint64_t stored_hash = unpack_u64(take("meta.frozen_hash"));

  BackboneConfig cfg;
  cfg.side = static_cast<int>(meta[kSide]);
  cfg.input_dim = cfg.side * cfg.side;
  cfg.hidden_dim = static_cast<int>(meta[kHiddenDim]);
  cfg.hidden_layers = static_cast<int>(meta[kHiddenLayers]);
  cfg.context_tokens = static_cast<int>(meta[kContextTokens]);
  cfg.context_dim = static_cast<int>(meta[kContextDim]);
  cfg.time_dim = static_cast<int>(meta[kTimeDim]);
  cfg.attn_dim = static_cast<int>(meta[kAttnDim]);
  cfg.seed = seed;
  const int encoder_hidden = static_cast<int>(meta[kEncoderHidden]);
  const int token_dim = static_cast<int>(meta[kTokenDim]);

  BackboneBundle bundle{Backbone(cfg, std::move(in)), Tokenizer(token_dim, seed),
                        TextEncoder(token_dim, encoder_hidden, cfg.context_dim, seed)};
  bundle.backbone.freeze();
  if (bundle.backbone.frozen_hash() != stored_hash)
    throw std::runtime_error("load_backbone: weight hash does not match the stored frozen hash");
  return bundle;
}

void save_bank(const std::filesystem::path& path, const PromptBank& bank) {
  TensorMap out;
  for (const auto& [kind, prompt] : bank.entries()) {
    const std::string prefix =
        std::string("bank.") + degradation_name(kind) + "." + variant_name(prompt.variant) + ".";
    if (prompt.variant == PromptVariant::Text) {
      // text prompts persist as vocabulary indices
      // (tokenize on load restores the words)
      throw std::invalid_argument("save_bank: text prompts carry no trained state to persist");
    }
    for (const auto& [name, t] : prompt.params) out.emplace(prefix + name, t);
  }
  save_checkpoint(path, out);
}

PromptBank load_bank(const std::filesystem::path& path, const Tokenizer& tok) {
  (void)tok;
  TensorMap in = load_checkpoint(path);
  PromptBank bank;
  std::map<std::pair<std::string, std::string>, TensorMap> grouped;
  for (auto& [name, t] : in) {
    std::istringstream is(name);
    std::string head, kind, variant, param;
    if (!std::getline(is, head, '.') || head != "bank" || !std::getline(is, kind, '.') ||
        !std::getline(is, variant, '.') || !std::getline(is, param))
      throw std::runtime_error("load_bank: unexpected tensor name '" + name + "'");
    grouped[{kind, variant}].emplace(param, std::move(t));
  }
  for (auto& [key, params] : grouped) {
    Prompt p;
    p.kind = degradation_from_name(key.first);
    p.variant = variant_from_name(key.second);
    p.params = std::move(params);
    bank.put(std::move(p));
  }
  return bank;
}

}  // namespace bp
