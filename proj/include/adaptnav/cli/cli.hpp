#pragma once

#include <string>
#include <vector>

#include "adaptnav/encoders/encoders.hpp"
#include "adaptnav/prompts/prompts.hpp"
#include "adaptnav/world/world.hpp"

namespace adaptnav {

// Entry point behind the adapt-nav binary: one subcommand per pipeline step
// (gen-world, gen-episodes, build-prompt-base, train, eval, inspect-prompts).
// `args` excludes the program name. Returns the process exit code; failures
// print a single `error: ...` line to stderr.
int run_cli(std::vector<std::string> args);

// Human-readable ranking of the prompts retrieved for an instruction:
// phrase, query similarity, source episode, and the labels visible in the
// selected view. Padded slots are omitted.
std::string inspect_prompts_text(const PromptBase& base,
                                 const std::string& instruction,
                                 const Vocabularies& vocabs,
                                 const DualEncoder& encoder, int n_max,
                                 WorldStore& worlds);

}  // namespace adaptnav
