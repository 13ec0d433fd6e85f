#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace bp {

inline constexpr const char* kVersionString = "bridgeprompt 0.1.0";

struct PretrainArgs {
  std::filesystem::path config;
  std::filesystem::path out_dir;
};

struct TrainPromptArgs {
  std::filesystem::path config;
  std::filesystem::path backbone;
  std::filesystem::path bank;  // created or updated
  std::filesystem::path out_dir;
  std::optional<std::string> trajectory;
  std::optional<std::string> degradation;
  std::optional<std::string> variant;
};

struct RestoreArgs {
  std::filesystem::path config;
  std::filesystem::path backbone;
  std::filesystem::path bank;
  std::filesystem::path out_dir;
  std::optional<std::string> trajectory;
  std::vector<std::string> mix_kinds;           // prompt kinds; 1 = single-prompt path
  std::vector<std::filesystem::path> inputs;    // external PGMs; empty = generated test set
};

struct AblateArgs {
  std::filesystem::path config;
  std::filesystem::path backbone;
  std::filesystem::path out_dir;
  bool t0_sweep = false;
  bool bridge_compare = false;
  bool force = false;
};

struct DiagnoseArgs {
  std::filesystem::path config;
  std::filesystem::path backbone;
  std::filesystem::path out_dir;
};

int cmd_pretrain(const PretrainArgs& args);
int cmd_train_prompt(const TrainPromptArgs& args);
int cmd_restore(const RestoreArgs& args);
int cmd_ablate(const AblateArgs& args);
int cmd_diagnose(const DiagnoseArgs& args);
int cmd_inspect(const std::filesystem::path& checkpoint);

}  // namespace bp
