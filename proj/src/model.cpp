// Copyright 2026 The MobileDenseNet Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "mdn/model.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <unordered_set>

#include "json.hpp"

namespace mdn {

using nlohmann::json;

namespace {

InitContext make_ctx(const ModelConfig& c, std::mt19937_64* rng) {
  InitContext ctx;
  ctx.rng = rng;
  ctx.bn_epsilon = c.bn_epsilon;
  ctx.bn_momentum = c.bn_momentum;
  return ctx;
}

const ModelConfig& validated(const ModelConfig& c) {
  c.validate();
  return c;
}

constexpr char kMagic[8] = {'M', 'D', 'N', 'C', 'K', 'P', 'T', '1'};

template <typename T>
const char* dtype_name() {
  return sizeof(T) == 4 ? "f32" : "f64";
}

}  // namespace

template <typename T>
Detector<T>::Detector(const ModelConfig& config)
    : config_(validated(config)),
      init_rng_(config_.seed),
      backbone_(config_, make_ctx(config_, &init_rng_)),
      neck_(config_, backbone_.level_channels(), make_ctx(config_, &init_rng_)),
      heads_(config_, neck_.out_channels(), make_ctx(config_, &init_rng_)) {}

template <typename T>
typename Detector<T>::Output Detector<T>::forward(const Act<T>& images, bool train,
                                                  Cache* cache) const {
  auto c = backbone_.forward(images, train, cache ? &cache->backbone : nullptr);
  auto p = neck_.forward(c, train, cache ? &cache->neck : nullptr);
  return heads_.forward(p, train, cache ? &cache->heads : nullptr);
}

template <typename T>
void Detector<T>::backward(const Tensor<T>& dcls, const Tensor<T>& dbox, const Cache& cache) {
  auto dp = heads_.backward(dcls, dbox, cache.heads);
  auto dc = neck_.backward(dp, cache.neck);
  backbone_.backward(dc, cache.backbone);
}

template <typename T>
ParamList<T> Detector<T>::params() {
  ParamList<T> all, out;
  backbone_.collect(all);
  neck_.collect(all);
  heads_.collect(all);
  std::unordered_set<Param<T>*> seen;
  for (auto* p : all)
    if (seen.insert(p).second) out.push_back(p);
  return out;
}

template <typename T>
ParamList<T> Detector<T>::section_params(Section section) {
  ParamList<T> all, out;
  switch (section) {
    case Section::kBackbone:
      backbone_.collect(all);
      break;
    case Section::kNeck:
      neck_.collect(all);
      break;
    case Section::kHead:
      heads_.collect(all);
      break;
  }
  std::unordered_set<Param<T>*> seen;
  for (auto* p : all)
    if (seen.insert(p).second) out.push_back(p);
  return out;
}

template <typename T>
void Detector<T>::zero_grad() {
  for (auto* p : params())
    if (p->trainable) p->zero_grad();
}

template <typename T>
CostTrace Detector<T>::trace(Section section, int input_size) const {
  check_input_extent(input_size, input_size);
  CostTrace bb, nk, hd;
  const auto dims = backbone_.trace(input_size, input_size, bb);
  neck_.trace(dims, nk);
  heads_.trace(dims, hd);
  switch (section) {
    case Section::kBackbone:
      return bb;
    case Section::kNeck:
      return nk;
    case Section::kHead:
      break;
  }
  return hd;
}

template <typename T>
void save_checkpoint(const std::string& path, Detector<T>& model,
                     const std::vector<std::string>& categories, std::int64_t iteration) {
  json header;
  header["format"] = "mdn-checkpoint";
  header["dtype"] = dtype_name<T>();
  header["config"] = to_json(model.config());
  header["categories"] = categories;
  header["iteration"] = iteration;
  json table = json::array();
  std::uint64_t offset = 0;
  auto params = model.params();
  for (auto* p : params) {
    table.push_back({{"name", p->name}, {"shape", p->shape}, {"offset", offset},
                     {"count", p->size()}});
    offset += p->size();
  }
  header["tensors"] = table;
  const std::string text = header.dump();

  const std::filesystem::path target(path);
  const std::filesystem::path tmp = target.string() + ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write checkpoint " + path);
    out.write(kMagic, sizeof(kMagic));
    const std::uint64_t len = text.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (auto* p : params)
      out.write(reinterpret_cast<const char*>(p->value.data()),
                static_cast<std::streamsize>(p->size() * sizeof(T)));
    if (!out) {
      out.close();
      std::filesystem::remove(tmp);
      throw CheckpointError("write failed for checkpoint " + path);
    }
  }
  std::filesystem::rename(tmp, target);
}

namespace {

json read_header(std::ifstream& in, const std::string& path) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw CheckpointError(path + " is not a checkpoint (bad magic)");
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || len > (1ull << 30)) throw CheckpointError(path + ": corrupt header length");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw CheckpointError(path + ": truncated header");
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw CheckpointError(path + ": header parse error at byte " + std::to_string(e.byte));
  }
}

CheckpointMeta meta_from(const json& header) {
  CheckpointMeta meta;
  meta.config = config_from_json(header.at("config"));
  meta.categories = header.at("categories").get<std::vector<std::string>>();
  meta.iteration = header.value("iteration", std::int64_t{0});
  for (const auto& entry : header.at("tensors"))
    meta.tensor_names.push_back(entry.at("name").get<std::string>());
  return meta;
}

template <typename T>
void read_tensors(std::ifstream& in, const json& header, Detector<T>& model,
                  const std::string& path) {
  if (header.at("dtype").get<std::string>() != dtype_name<T>())
    throw CheckpointError(path + ": stored dtype " + header.at("dtype").get<std::string>() +
                          " does not match the model");
  const auto& table = header.at("tensors");
  auto params = model.params();
  if (table.size() != params.size())
    throw CheckpointError(path + ": checkpoint has " + std::to_string(table.size()) +
                          " tensors, model has " + std::to_string(params.size()));
  const auto data_start = in.tellg();
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto* p = params[i];
    const auto& e = table[i];
    if (e.at("name").get<std::string>() != p->name ||
        e.at("shape").get<std::vector<int>>() != p->shape)
      throw CheckpointError(path + ": tensor " + e.at("name").get<std::string>() +
                            " does not match model tensor " + p->name);
    const auto offset = e.at("offset").get<std::uint64_t>();
    in.seekg(data_start + static_cast<std::streamoff>(offset * sizeof(T)));
    in.read(reinterpret_cast<char*>(p->value.data()),
            static_cast<std::streamsize>(p->size() * sizeof(T)));
    if (!in) throw CheckpointError(path + ": truncated tensor data for " + p->name);
  }
}

}  // namespace

CheckpointMeta read_checkpoint_meta(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path);
  return meta_from(read_header(in, path));
}

template <typename T>
Detector<T> load_checkpoint(const std::string& path, CheckpointMeta* meta) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path);
  const json header = read_header(in, path);
  CheckpointMeta m = meta_from(header);
  Detector<T> model(m.config);
  read_tensors(in, header, model, path);
  if (meta) *meta = std::move(m);
  return model;
}

template <typename T>
void load_checkpoint_into(const std::string& path, Detector<T>& model) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path);
  const json header = read_header(in, path);
  const CheckpointMeta m = meta_from(header);
  const std::string diff = config_difference(m.config, model.config(), true);
  if (!diff.empty())
    throw CheckpointError(path + ": stored config differs from the model config in '" + diff + "'");
  read_tensors(in, header, model, path);
}

template class Detector<float>;
template class Detector<double>;
template void save_checkpoint<float>(const std::string&, Detector<float>&,
                                     const std::vector<std::string>&, std::int64_t);
template void save_checkpoint<double>(const std::string&, Detector<double>&,
                                      const std::vector<std::string>&, std::int64_t);
template Detector<float> load_checkpoint<float>(const std::string&, CheckpointMeta*);
template Detector<double> load_checkpoint<double>(const std::string&, CheckpointMeta*);
template void load_checkpoint_into<float>(const std::string&, Detector<float>&);
template void load_checkpoint_into<double>(const std::string&, Detector<double>&);

}  // namespace mdn
