#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "toprec/model.hpp"

namespace toprec {

// Versioned binary container for trained models: metadata key-values, the id
// maps and a raw-double snapshot of every parameter block. Round-trips are
// bit-exact.
struct Checkpoint {
  std::map<std::string, std::string> meta;
  std::vector<std::string> users;
  std::vector<std::string> items;
  std::vector<ParamBlock> blocks;

  const ParamBlock* find_block(const std::string& name) const;
  const std::string& require(const std::string& key) const;
};

Checkpoint snapshot_model(RankModel& model,
                          std::map<std::string, std::string> meta,
                          std::vector<std::string> users,
                          std::vector<std::string> items);

// Copies checkpoint values into a freshly constructed model of the same
// shape; block names and dimensions must match exactly.
void load_params_into(RankModel& model, const Checkpoint& ckpt);

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint_file(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint_file(const std::string& path);

}  // namespace toprec
