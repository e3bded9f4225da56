#pragma once

#include <string>
#include <vector>

#include "posedmp/dmp.hpp"

namespace posedmp {

/// One demonstration segment trained three ways, one per merge strategy:
/// phase kernels for the switch, phase kernels fitted to the moving-target
/// dynamics, and time kernels for the kernel stack.
struct ModelSegment {
  double duration = 0.0;  // seconds, as demonstrated
  PoseDmp phase;
  PoseDmp moving;
  PoseDmp time;
};

struct ModelFile {
  std::vector<ModelSegment> segments;
};

constexpr int kModelFormatVersion = 1;

std::string model_to_json(const ModelFile& m);
/// Throws ParseError on malformed input or an unsupported version.
ModelFile model_from_json(const std::string& text);

void save_model(const ModelFile& m, const std::string& path);
ModelFile load_model(const std::string& path);

}  // namespace posedmp
