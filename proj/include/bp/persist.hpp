#pragma once

#include <filesystem>

#include "bp/backbone.hpp"
#include "bp/checkpoint.hpp"
#include "bp/prompts.hpp"

namespace bp {

// Frozen backbone plus the frozen conditioning frontend it was pretrained
// with. The tokenizer and text encoder are rebuilt from the stored seed so
// a checkpoint is self-contained.
struct BackboneBundle {
  Backbone backbone;
  Tokenizer tokenizer;
  TextEncoder encoder;
};

void save_backbone(const std::filesystem::path& path, const Backbone& backbone, int token_dim,
                   int encoder_hidden);

// Loads, rebuilds the frontend, freezes and verifies the stored hash.
BackboneBundle load_backbone(const std::filesystem::path& path);

void save_bank(const std::filesystem::path& path, const PromptBank& bank);
PromptBank load_bank(const std::filesystem::path& path, const Tokenizer& tok);

}  // namespace bp
