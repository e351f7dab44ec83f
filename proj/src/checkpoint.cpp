#include "toprec/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace toprec {

namespace {

constexpr char kMagic[8] = {'T', 'P', 'R', 'C', 'K', 'P', 'T', '1'};

void put_u32(std::ostream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

uint32_t get_u32(std::istream& in) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

void put_str(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_str(std::istream& in) {
  uint32_t n = get_u32(in);
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in) throw std::runtime_error("checkpoint: truncated string");
  return s;
}

}  // namespace

const ParamBlock* Checkpoint::find_block(const std::string& name) const {
  for (const auto& b : blocks)
    if (b.name == name) return &b;
  return nullptr;
}

const std::string& Checkpoint::require(const std::string& key) const {
  auto it = meta.find(key);
  if (it == meta.end())
    throw std::runtime_error("checkpoint: missing metadata key " + key);
  return it->second;
}

Checkpoint snapshot_model(RankModel& model, std::map<std::string, std::string> meta,
                          std::vector<std::string> users,
                          std::vector<std::string> items) {
  Checkpoint ckpt;
  ckpt.meta = std::move(meta);
  ckpt.meta["kind"] = model.kind();
  ckpt.meta["d"] = std::to_string(model.latent_dim());
  ckpt.meta["n_users"] = std::to_string(model.num_users());
  ckpt.meta["n_items"] = std::to_string(model.num_items());
  ckpt.users = std::move(users);
  ckpt.items = std::move(items);
  for (ParamBlock* b : model.param_blocks()) ckpt.blocks.push_back(*b);
  return ckpt;
}

void load_params_into(RankModel& model, const Checkpoint& ckpt) {
  if (ckpt.require("kind") != model.kind())
    throw std::runtime_error("checkpoint kind " + ckpt.require("kind") +
                             " does not match model " + model.kind());
  for (ParamBlock* b : model.param_blocks()) {
    const ParamBlock* src = ckpt.find_block(b->name);
    if (!src) throw std::runtime_error("checkpoint: missing block " + b->name);
    if (src->rows != b->rows || src->cols != b->cols)
      throw std::runtime_error("checkpoint: block " + b->name +
                               " has mismatched shape (config/checkpoint d differ?)");
    b->v = src->v;
  }
  model.bump_version();
}

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  out.write(kMagic, sizeof(kMagic));
  put_u32(out, 1);  // format version
  put_u32(out, static_cast<uint32_t>(ckpt.meta.size()));
  for (const auto& [k, v] : ckpt.meta) {
    put_str(out, k);
    put_str(out, v);
  }
  put_u32(out, static_cast<uint32_t>(ckpt.users.size()));
  for (const auto& u : ckpt.users) put_str(out, u);
  put_u32(out, static_cast<uint32_t>(ckpt.items.size()));
  for (const auto& i : ckpt.items) put_str(out, i);
  put_u32(out, static_cast<uint32_t>(ckpt.blocks.size()));
  for (const auto& b : ckpt.blocks) {
    put_str(out, b.name);
    put_u32(out, static_cast<uint32_t>(b.rows));
    put_u32(out, static_cast<uint32_t>(b.cols));
    put_u32(out, b.regularize ? 1 : 0);
    out.write(reinterpret_cast<const char*>(b.v.data()),
              static_cast<std::streamsize>(b.v.size() * sizeof(double)));
  }
}

Checkpoint read_checkpoint(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("not a model checkpoint file");
  uint32_t version = get_u32(in);
  if (version != 1)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));

  Checkpoint ckpt;
  uint32_t n_meta = get_u32(in);
  for (uint32_t j = 0; j < n_meta; ++j) {
    std::string k = get_str(in);
    ckpt.meta[k] = get_str(in);
  }
  uint32_t n_users = get_u32(in);
  for (uint32_t j = 0; j < n_users; ++j) ckpt.users.push_back(get_str(in));
  uint32_t n_items = get_u32(in);
  for (uint32_t j = 0; j < n_items; ++j) ckpt.items.push_back(get_str(in));
  uint32_t n_blocks = get_u32(in);
  for (uint32_t j = 0; j < n_blocks; ++j) {
    ParamBlock b;
    b.name = get_str(in);
    b.rows = static_cast<int>(get_u32(in));
    b.cols = static_cast<int>(get_u32(in));
    b.regularize = get_u32(in) != 0;
    b.v.resize(static_cast<size_t>(b.rows) * b.cols);
    in.read(reinterpret_cast<char*>(b.v.data()),
            static_cast<std::streamsize>(b.v.size() * sizeof(double)));
    if (!in) throw std::runtime_error("checkpoint: truncated block " + b.name);
    ckpt.blocks.push_back(std::move(b));
  }
  return ckpt;
}

void save_checkpoint_file(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  write_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint: " + path);
  return read_checkpoint(in);
}

}  // namespace toprec
