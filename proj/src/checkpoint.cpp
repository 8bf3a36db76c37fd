#include "smadrl/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "smadrl/errors.hpp"

namespace smadrl {

namespace {

using nlohmann::json;

static_assert(kCheckpointMagic.size() == 16);

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_u64(std::string_view in, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return v;
}

class BlobWriter {
 public:
  template <typename Range>
  void add(const std::string& name, const Range& values) {
    table_.push_back({{"name", name}, {"count", values.size()}});
    for (auto v : values) put_u32(data_, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  const json& table() const { return table_; }
  const std::string& data() const { return data_; }

 private:
  json table_ = json::array();
  std::string data_;
};

class BlobReader {
 public:
  BlobReader(const json& table, std::string_view data) : table_(table), data_(data) {}

  std::vector<float> next(const std::string& name, std::size_t expected) {
    if (index_ >= table_.size()) throw IoError("checkpoint: missing blob '" + name + "'");
    const json& entry = table_[index_++];
    if (entry.at("name").get<std::string>() != name || entry.at("count").get<std::size_t>() != expected) {
      throw IoError("checkpoint: blob table does not match the manifest at '" + name + "'");
    }
    if (offset_ + 4 * expected > data_.size()) throw IoError("checkpoint: truncated file");
    std::vector<float> out(expected);
    for (std::size_t i = 0; i < expected; ++i) {
      std::uint32_t v = 0;
      for (int b = 0; b < 4; ++b) {
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[offset_ + 4 * i + b])) << (8 * b);
      }
      out[i] = std::bit_cast<float>(v);
    }
    offset_ += 4 * expected;
    return out;
  }

  void expect_end() const {
    if (index_ != table_.size() || offset_ != data_.size()) {
      throw IoError("checkpoint: trailing data after the last blob");
    }
  }

 private:
  const json& table_;
  std::string_view data_;
  std::size_t index_ = 0;
  std::size_t offset_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  json manifest;
  manifest["format_version"] = kCheckpointVersion;
  manifest["config"] = config_to_json(ckpt.config);
  manifest["seed"] = ckpt.seed;
  manifest["episodes_done"] = ckpt.episodes_done;
  manifest["obs_dim"] = ckpt.config.obs_dim();

  BlobWriter blobs;
  json agents = json::array();
  for (std::size_t i = 0; i < ckpt.agents.size(); ++i) {
    const DqnAgent& a = ckpt.agents[i];
    const ReplayBuffer& rb = a.replay();
    const std::size_t d = static_cast<std::size_t>(rb.obs_dim());
    agents.push_back({
        {"sizes", a.online().sizes()},
        {"learning", a.learning()},
        {"steps", a.steps()},
        {"updates", a.updates()},
        {"epsilon_horizon", a.schedule().horizon},
        {"adam_t", a.adam().t},
        {"rng", a.rng().save_state()},
        {"replay", {{"capacity", rb.capacity()}, {"size", rb.size()}, {"head", rb.head()}}},
    });
    const std::string p = "agent" + std::to_string(i) + ".";
    blobs.add(p + "online", a.online().params());
    blobs.add(p + "target", a.target().params());
    blobs.add(p + "adam_m", a.adam().m);
    blobs.add(p + "adam_v", a.adam().v);
    blobs.add(p + "replay_obs", rb.raw_obs().first(rb.size() * d));
    blobs.add(p + "replay_next_obs", rb.raw_next_obs().first(rb.size() * d));
    blobs.add(p + "replay_actions", rb.raw_actions().first(rb.size()));
    blobs.add(p + "replay_rewards", rb.raw_rewards().first(rb.size()));
    blobs.add(p + "replay_done", rb.raw_done().first(rb.size()));
  }
  manifest["agents"] = agents;
  manifest["blobs"] = blobs.table();

  const std::string text = manifest.dump();
  std::string out(kCheckpointMagic);
  put_u64(out, text.size());
  out += text;
  out += blobs.data();
  return out;
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
  if (bytes.size() < 24 || bytes.substr(0, 16) != kCheckpointMagic) {
    throw IoError("checkpoint: bad magic header");
  }
  const std::uint64_t manifest_len = get_u64(bytes, 16);
  if (manifest_len > bytes.size() - 24) throw IoError("checkpoint: truncated manifest");
  json manifest;
  try {
    manifest = json::parse(bytes.substr(24, manifest_len));
  } catch (const json::exception& e) {
    throw IoError(std::string("checkpoint: unreadable manifest: ") + e.what());
  }

  try {
    if (manifest.at("format_version").get<int>() != kCheckpointVersion) {
      throw IoError("checkpoint: unsupported format version");
    }
    Checkpoint ckpt;
    ckpt.config = config_from_json(manifest.at("config"));
    ckpt.seed = manifest.at("seed").get<std::uint64_t>();
    ckpt.episodes_done = manifest.at("episodes_done").get<int>();
    const int obs_dim = manifest.at("obs_dim").get<int>();
    if (obs_dim != ckpt.config.obs_dim()) throw IoError("checkpoint: observation size mismatch");

    BlobReader blobs(manifest.at("blobs"), bytes.substr(24 + manifest_len));
    const auto& agents = manifest.at("agents");
    for (std::size_t i = 0; i < agents.size(); ++i) {
      const json& ja = agents[i];
      DqnAgent a(obs_dim, ckpt.config.learner, 0);
      if (ja.at("sizes").get<std::vector<int>>() != a.online().sizes()) {
        throw IoError("checkpoint: network shape does not match the config");
      }
      a.set_learning(ja.at("learning").get<bool>());
      a.set_counters(ja.at("steps").get<std::int64_t>(), ja.at("updates").get<std::int64_t>());
      a.schedule().horizon = ja.at("epsilon_horizon").get<std::int64_t>();
      a.adam().t = ja.at("adam_t").get<std::int64_t>();
      a.rng().load_state(ja.at("rng").get<std::string>());

      const std::string p = "agent" + std::to_string(i) + ".";
      const std::size_t n = a.online().param_count();
      auto copy_into = [](std::span<float> dst, const std::vector<float>& src) {
        std::copy(src.begin(), src.end(), dst.begin());
      };
      copy_into(a.online().params(), blobs.next(p + "online", n));
      copy_into(a.target().params(), blobs.next(p + "target", n));
      a.adam().m = blobs.next(p + "adam_m", n);
      a.adam().v = blobs.next(p + "adam_v", n);

      const json& jr = ja.at("replay");
      const std::size_t capacity = jr.at("capacity").get<std::size_t>();
      const std::size_t size = jr.at("size").get<std::size_t>();
      const std::size_t head = jr.at("head").get<std::size_t>();
      if (capacity != a.replay().capacity() || size > capacity) {
        throw IoError("checkpoint: replay capacity does not match the config");
      }
      const std::size_t d = static_cast<std::size_t>(obs_dim);
      auto obs = blobs.next(p + "replay_obs", size * d);
      auto next_obs = blobs.next(p + "replay_next_obs", size * d);
      const auto actions_f = blobs.next(p + "replay_actions", size);
      auto rewards = blobs.next(p + "replay_rewards", size);
      const auto done_f = blobs.next(p + "replay_done", size);
      obs.resize(capacity * d, 0.0f);
      next_obs.resize(capacity * d, 0.0f);
      rewards.resize(capacity, 0.0f);
      std::vector<int> actions(capacity, 0);
      std::vector<std::uint8_t> done(capacity, 0);
      for (std::size_t k = 0; k < size; ++k) {
        actions[k] = static_cast<int>(actions_f[k]);
        done[k] = done_f[k] != 0.0f ? 1 : 0;
      }
      a.replay().restore(size, head, std::move(obs), std::move(next_obs), std::move(actions),
                         std::move(rewards), std::move(done));
      ckpt.agents.push_back(std::move(a));
    }
    blobs.expect_end();
    return ckpt;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("checkpoint: malformed manifest: ") + e.what());
  } catch (const ConfigError& e) {
    throw IoError(std::string("checkpoint: embedded config rejected: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw IoError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
  const std::string bytes = serialize_checkpoint(checkpoint);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_checkpoint(buf.str());
}

}  // namespace smadrl
