#include "scaleop/io.hpp"

#include <cstring>
#include <fstream>

namespace scaleop {

namespace {

constexpr char kDatasetMagic[5] = {'M', 'S', 'P', 'D', '1'};
constexpr char kCheckpointMagic[5] = {'M', 'S', 'C', 'K', '1'};
constexpr int kFormatVersion = 1;

struct NamedTensor {
  std::string name;
  ad::Tensor value;
};

void write_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!is) throw IoError("io: truncated file");
  return v;
}
std::uint32_t read_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!is) throw IoError("io: truncated file");
  return v;
}

// Tensor payloads are written with the declared shape [channels, dims...] in
// row-major order, which is exactly the channel-contiguous memory layout.
void write_tensor(std::ostream& os, const NamedTensor& nt) {
  write_u32(os, static_cast<std::uint32_t>(nt.name.size()));
  os.write(nt.name.data(), static_cast<std::streamsize>(nt.name.size()));
  const ad::Tensor& t = nt.value;
  os.put(t.is_complex() ? 1 : 0);
  write_u32(os, static_cast<std::uint32_t>(t.dims.size() + 1));
  write_u64(os, static_cast<std::uint64_t>(t.channels));
  for (Index d : t.dims) write_u64(os, static_cast<std::uint64_t>(d));
  if (t.is_complex()) {
    os.write(reinterpret_cast<const char*>(t.c.data()),
             static_cast<std::streamsize>(sizeof(Complex) * t.c.size()));
  } else {
    os.write(reinterpret_cast<const char*>(t.r.data()),
             static_cast<std::streamsize>(sizeof(Real) * t.r.size()));
  }
}

NamedTensor read_tensor(std::istream& is) {
  NamedTensor nt;
  const std::uint32_t name_len = read_u32(is);
  if (name_len > (1u << 20)) throw IoError("io: corrupt tensor name length");
  nt.name.resize(name_len);
  is.read(nt.name.data(), name_len);
  const int dtype = is.get();
  if (dtype != 0 && dtype != 1) throw IoError("io: corrupt tensor dtype");
  const std::uint32_t ndim = read_u32(is);
  if (ndim < 1 || ndim > 8) throw IoError("io: corrupt tensor rank");
  const Index channels = static_cast<Index>(read_u64(is));
  std::vector<Index> dims(ndim - 1);
  for (auto& d : dims) d = static_cast<Index>(read_u64(is));
  Index rows = 1;
  for (Index d : dims) rows *= d;
  if (rows <= 0 || channels <= 0 || rows * channels > (Index(1) << 32))
    throw IoError("io: corrupt tensor shape");
  if (dtype == 1) {
    nt.value = ad::Tensor::complex(dims, channels);
    is.read(reinterpret_cast<char*>(nt.value.c.data()),
            static_cast<std::streamsize>(sizeof(Complex) * rows * channels));
  } else {
    nt.value = ad::Tensor::real(dims, channels);
    is.read(reinterpret_cast<char*>(nt.value.r.data()),
            static_cast<std::streamsize>(sizeof(Real) * rows * channels));
  }
  if (!is) throw IoError("io: truncated tensor payload");
  return nt;
}

void write_container(const std::string& path, const char magic[5],
                     const Json& manifest, const std::vector<NamedTensor>& tensors) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("io: cannot open for writing: " + path);
  os.write(magic, 5);
  const std::string m = manifest.dump();
  write_u64(os, m.size());
  os.write(m.data(), static_cast<std::streamsize>(m.size()));
  write_u64(os, tensors.size());
  for (const NamedTensor& nt : tensors) write_tensor(os, nt);
  if (!os) throw IoError("io: write failed: " + path);
}

std::pair<Json, std::vector<NamedTensor>> read_container(const std::string& path,
                                                         const char magic[5]) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("io: cannot open: " + path);
  char got[5];
  is.read(got, 5);
  if (!is || std::memcmp(got, magic, 5) != 0)
    throw IoError("io: bad magic in " + path);
  const std::uint64_t mlen = read_u64(is);
  if (mlen > (1ull << 30)) throw IoError("io: corrupt manifest length");
  std::string mstr(mlen, '\0');
  is.read(mstr.data(), static_cast<std::streamsize>(mlen));
  if (!is) throw IoError("io: truncated manifest");
  Json manifest;
  try {
    manifest = Json::parse(mstr);
  } catch (const std::exception& e) {
    throw IoError(std::string("io: manifest parse error: ") + e.what());
  }
  if (manifest.value("format_version", -1) != kFormatVersion)
    throw IoError("io: format version mismatch in " + path);
  const std::uint64_t count = read_u64(is);
  std::vector<NamedTensor> tensors;
  tensors.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) tensors.push_back(read_tensor(is));
  return {std::move(manifest), std::move(tensors)};
}

// field/trace <-> tensor helpers ------------------------------------------

ad::Tensor field_tensor(const Field& f) {
  std::vector<Index> dims(f.domain.naxes());
  for (int a = 0; a < f.domain.naxes(); ++a) dims[a] = f.domain.axes[a].res;
  return ad::Tensor::from_real(dims, f.values);
}

ad::Tensor cfield_tensor(const CField& f) {
  std::vector<Index> dims(f.domain.naxes());
  for (int a = 0; a < f.domain.naxes(); ++a) dims[a] = f.domain.axes[a].res;
  return ad::Tensor::from_complex(dims, f.values);
}

Field tensor_field(const ad::Tensor& t, const Domain& d) {
  require(!t.is_complex(), "io: expected a real tensor");
  Field f;
  f.domain = d;
  f.values = t.r;
  require(f.values.rows() == d.npoints(), "io: tensor/domain mismatch");
  return f;
}

CField tensor_cfield(const ad::Tensor& t, const Domain& d) {
  require(t.is_complex(), "io: expected a complex tensor");
  CField f;
  f.domain = d;
  f.values = t.c;
  require(f.values.rows() == d.npoints(), "io: tensor/domain mismatch");
  return f;
}

std::string face_name(int axis, bool high) {
  return "axis" + std::to_string(axis) + (high ? "_hi" : "_lo");
}

}  // namespace

Json domain_to_json(const Domain& d) {
  Json axes = Json::array();
  for (const Axis& a : d.axes)
    axes.push_back({{"origin", a.origin},
                    {"extent", a.extent},
                    {"res", a.res},
                    {"periodic", a.periodic},
                    {"cell_start", a.cell_start}});
  return {{"axes", axes}, {"rank", d.rank}, {"has_time", d.has_time}};
}

Domain domain_from_json(const Json& j) {
  std::vector<Axis> axes;
  for (const Json& a : j.at("axes"))
    axes.push_back(Axis{a.at("origin").get<Real>(), a.at("extent").get<Real>(),
                        a.at("res").get<Index>(), a.at("periodic").get<bool>(),
                        a.at("cell_start").get<bool>()});
  return Domain(axes, j.at("rank").get<int>(), j.at("has_time").get<bool>());
}

void save_dataset(const std::string& path, const Dataset& ds) {
  Json manifest = ds.manifest;
  manifest["format_version"] = kFormatVersion;
  manifest["count"] = ds.instances.size();

  Json insts = Json::array();
  std::vector<NamedTensor> tensors;
  for (size_t i = 0; i < ds.instances.size(); ++i) {
    const PdeInstance& inst = ds.instances[i];
    const std::string prefix = "inst" + std::to_string(i) + "/";
    Json meta;
    meta["equation"] = equation_name(inst.equation);
    meta["k"] = inst.k;
    meta["domain"] = domain_to_json(inst.domain);
    Json names = Json::array();
    auto put = [&](const std::string& n, ad::Tensor t) {
      tensors.push_back({prefix + n, std::move(t)});
      names.push_back(n);
    };
    if (inst.a) put("a", field_tensor(*inst.a));
    if (inst.f) put("f", field_tensor(*inst.f));
    if (inst.u) put("u", field_tensor(*inst.u));
    if (inst.uc) put("uc", cfield_tensor(*inst.uc));
    if (inst.history) put("history", field_tensor(*inst.history));
    if (inst.g)
      for (const auto& face : inst.g->faces)
        put("g/" + face_name(face.axis, face.high),
            ad::Tensor::from_real({face.values.rows()}, face.values));
    if (inst.gc)
      for (const auto& face : inst.gc->faces)
        put("gc/" + face_name(face.axis, face.high),
            ad::Tensor::from_complex({face.values.rows()}, face.values));
    meta["tensors"] = names;
    insts.push_back(meta);
  }
  manifest["instances"] = insts;
  write_container(path, kDatasetMagic, manifest, tensors);
}

Dataset load_dataset(const std::string& path) {
  auto [manifest, tensors] = read_container(path, kDatasetMagic);
  Dataset ds;
  ds.manifest = manifest;

  auto find = [&](const std::string& name) -> const ad::Tensor* {
    for (const auto& nt : tensors)
      if (nt.name == name) return &nt.value;
    return nullptr;
  };
  auto need = [&](const std::string& name) -> const ad::Tensor& {
    const ad::Tensor* t = find(name);
    if (!t) throw IoError("io: manifest references missing tensor " + name);
    return *t;
  };

  const Json& insts = manifest.at("instances");
  for (size_t i = 0; i < insts.size(); ++i) {
    const Json& meta = insts[i];
    const std::string prefix = "inst" + std::to_string(i) + "/";
    PdeInstance inst;
    inst.equation = equation_from_name(meta.at("equation").get<std::string>());
    inst.k = meta.at("k").get<Real>();
    inst.domain = domain_from_json(meta.at("domain"));

    BoundaryTrace g;
    CBoundaryTrace gc;
    g.domain = inst.domain;
    gc.domain = inst.domain;
    for (const Json& jn : meta.at("tensors")) {
      const std::string n = jn.get<std::string>();
      const ad::Tensor& t = need(prefix + n);
      if (n == "a") inst.a = tensor_field(t, inst.domain);
      else if (n == "f") inst.f = tensor_field(t, inst.domain);
      else if (n == "u") inst.u = tensor_field(t, inst.domain);
      else if (n == "uc") inst.uc = tensor_cfield(t, inst.domain);
      else if (n == "history") inst.history = tensor_field(t, inst.domain);
      else if (n.rfind("g/", 0) == 0 || n.rfind("gc/", 0) == 0) {
        const bool complex_face = n[1] == 'c';
        const std::string fn = n.substr(complex_face ? 3 : 2);
        const int axis = fn[4] - '0';
        const bool high = fn.substr(6) == "hi";
        if (complex_face) {
          FaceT<Complex> face;
          face.axis = axis;
          face.high = high;
          face.values = t.c;
          gc.faces.push_back(std::move(face));
        } else {
          FaceT<Real> face;
          face.axis = axis;
          face.high = high;
          face.values = t.r;
          g.faces.push_back(std::move(face));
        }
      } else {
        throw IoError("io: unknown tensor kind " + n);
      }
    }
    if (!g.faces.empty()) inst.g = std::move(g);
    if (!gc.faces.empty()) inst.gc = std::move(gc);
    inst.validate();
    ds.instances.push_back(std::move(inst));
  }
  return ds;
}

Json arch_to_json(const ArchSpec& a) {
  return {{"rank", a.rank},
          {"channels", a.channels},
          {"modes", a.modes},
          {"levels", a.levels},
          {"layers", a.layers},
          {"shared_level0", a.shared_level0},
          {"scale_informed", a.scale_informed},
          {"freq_embedding", a.freq_embedding},
          {"spectral_norm", a.spectral_norm},
          {"padding_fraction", a.padding_fraction},
          {"boundary_normalize", a.boundary_normalize}};
}

ArchSpec arch_from_json(const Json& j) {
  ArchSpec a;
  a.rank = j.value("rank", 2);
  a.channels = j.value("channels", Index(16));
  a.modes = j.value("modes", Index(12));
  a.levels = j.value("levels", Index(1));
  a.layers = j.value("layers", Index(3));
  a.shared_level0 = j.value("shared_level0", false);
  a.scale_informed = j.value("scale_informed", false);
  a.freq_embedding = j.value("freq_embedding", false);
  a.spectral_norm = j.value("spectral_norm", false);
  a.padding_fraction = j.value("padding_fraction", 0.125);
  a.boundary_normalize = j.value("boundary_normalize", false);
  a.validate();
  return a;
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  Json manifest;
  manifest["format_version"] = kFormatVersion;
  manifest["arch"] = arch_to_json(ck.arch);
  manifest["in_channels"] = ck.in_channels;
  manifest["out_channels"] = ck.out_channels;
  manifest["adam_t"] = ck.adam_t;
  manifest["config"] = ck.config_echo;
  manifest["metrics"] = ck.metric_history;
  Json names = Json::array();
  std::vector<NamedTensor> tensors;
  for (size_t i = 0; i < ck.params.size(); ++i) {
    const auto& [name, value] = ck.params.item(i);
    names.push_back(name);
    tensors.push_back({"param/" + name, value});
  }
  manifest["params"] = names;
  for (size_t i = 0; i < ck.adam_m.size(); ++i) {
    tensors.push_back({"adam_m/" + std::to_string(i),
                       ad::Tensor::from_real({ck.adam_m[i].size()}, ck.adam_m[i])});
    tensors.push_back({"adam_v/" + std::to_string(i),
                       ad::Tensor::from_real({ck.adam_v[i].size()}, ck.adam_v[i])});
  }
  manifest["adam_slots"] = ck.adam_m.size();
  write_container(path, kCheckpointMagic, manifest, tensors);
}

Checkpoint load_checkpoint(const std::string& path) {
  auto [manifest, tensors] = read_container(path, kCheckpointMagic);
  Checkpoint ck;
  ck.arch = arch_from_json(manifest.at("arch"));
  ck.in_channels = manifest.at("in_channels").get<Index>();
  ck.out_channels = manifest.at("out_channels").get<Index>();
  ck.adam_t = manifest.value("adam_t", Index(0));
  ck.config_echo = manifest.value("config", Json::object());
  ck.metric_history = manifest.value("metrics", Json::array());

  auto need = [&](const std::string& name) -> const ad::Tensor& {
    for (const auto& nt : tensors)
      if (nt.name == name) return nt.value;
    throw IoError("io: checkpoint missing tensor " + name);
  };
  for (const Json& jn : manifest.at("params")) {
    const std::string name = jn.get<std::string>();
    ck.params.add(name, need("param/" + name));
  }
  const size_t slots = manifest.value("adam_slots", size_t(0));
  for (size_t i = 0; i < slots; ++i) {
    ck.adam_m.push_back(need("adam_m/" + std::to_string(i)).r.col(0));
    ck.adam_v.push_back(need("adam_v/" + std::to_string(i)).r.col(0));
  }
  return ck;
}

SinoModel model_from_checkpoint(const Checkpoint& ck) {
  SinoModel m;
  m.arch = ck.arch;
  m.in_channels = ck.in_channels;
  m.out_channels = ck.out_channels;
  m.params = ck.params;
  return m;
}

Checkpoint checkpoint_from(const SinoModel& model, const Json& config_echo) {
  Checkpoint ck;
  ck.arch = model.arch;
  ck.in_channels = model.in_channels;
  ck.out_channels = model.out_channels;
  ck.params = model.params;
  ck.config_echo = config_echo;
  return ck;
}

struct MetricsWriter::Impl {
  std::ofstream os;
};

MetricsWriter::MetricsWriter(const std::string& path) : impl_(new Impl) {
  impl_->os.open(path);
  if (!impl_->os) throw IoError("io: cannot open metrics stream: " + path);
}

MetricsWriter::~MetricsWriter() = default;

void MetricsWriter::write(const Json& record) {
  impl_->os << record.dump() << "\n";
  impl_->os.flush();
}

Json epoch_to_json(const EpochMetrics& em) {
  return {{"epoch", em.epoch},       {"lr", em.lr},
          {"train_loss", em.train_loss}, {"sup_loss", em.sup_loss},
          {"sub_loss", em.sub_loss}, {"super_loss", em.super_loss},
          {"seconds", em.seconds}};
}

}  // namespace scaleop
