#include "scaleop/io.hpp"

#include "scaleop/datagen.hpp"

#include <doctest.h>

#include <cstdio>
#include <fstream>

using namespace scaleop;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name)
      : path("/tmp/scaleop_test_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

bool tensors_equal(const ad::Tensor& a, const ad::Tensor& b) {
  if (a.dims != b.dims || a.channels != b.channels || a.dtype != b.dtype)
    return false;
  if (a.is_complex()) return (a.c - b.c).cwiseAbs().maxCoeff() == 0.0;
  return (a.r - b.r).cwiseAbs().maxCoeff() == 0.0;
}

}  // namespace

TEST_CASE("dataset round trip is bitwise exact") {
  Dataset ds;
  ds.manifest = {{"equation", "mixed"}, {"seed", 42}};
  ds.instances.push_back(make_darcy_instance(4.0, 17, 1));
  ds.instances.push_back(make_helmholtz_instance(3.0, 17, 2));
  ds.instances.push_back(make_burgers_instance(0.01, 32, 16, 3));
  ds.instances.push_back(make_ns_instance(300.0, 32, 3, 4));

  TempFile f("roundtrip.mspd");
  save_dataset(f.path, ds);
  Dataset back = load_dataset(f.path);

  REQUIRE(back.instances.size() == ds.instances.size());
  for (size_t i = 0; i < ds.instances.size(); ++i) {
    const PdeInstance& a = ds.instances[i];
    const PdeInstance& b = back.instances[i];
    CHECK(a.equation == b.equation);
    CHECK(a.k == b.k);  // exact
    CHECK(a.domain.same_shape(b.domain));
    for (int ax = 0; ax < a.domain.naxes(); ++ax) {
      CHECK(a.domain.axes[ax].origin == b.domain.axes[ax].origin);
      CHECK(a.domain.axes[ax].extent == b.domain.axes[ax].extent);
      CHECK(a.domain.axes[ax].periodic == b.domain.axes[ax].periodic);
      CHECK(a.domain.axes[ax].cell_start == b.domain.axes[ax].cell_start);
    }
    CHECK(a.a.has_value() == b.a.has_value());
    if (a.a) CHECK((a.a->values - b.a->values).cwiseAbs().maxCoeff() == 0.0);
    if (a.u) CHECK((a.u->values - b.u->values).cwiseAbs().maxCoeff() == 0.0);
    if (a.uc) CHECK((a.uc->values - b.uc->values).cwiseAbs().maxCoeff() == 0.0);
    if (a.history)
      CHECK((a.history->values - b.history->values).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.g.has_value() == b.g.has_value());
    if (a.g) {
      REQUIRE(a.g->faces.size() == b.g->faces.size());
      for (size_t fc = 0; fc < a.g->faces.size(); ++fc)
        CHECK((a.g->face(a.g->faces[fc].axis, a.g->faces[fc].high).values -
               b.g->face(a.g->faces[fc].axis, a.g->faces[fc].high).values)
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
    }
    if (a.gc) {
      REQUIRE(b.gc.has_value());
      for (size_t fc = 0; fc < a.gc->faces.size(); ++fc)
        CHECK((a.gc->faces[fc].values - b.gc->faces[fc].values)
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
    }
  }

  // the two serializations are byte-identical
  TempFile f2("roundtrip2.mspd");
  save_dataset(f2.path, back);
  std::ifstream s1(f.path, std::ios::binary), s2(f2.path, std::ios::binary);
  std::string b1((std::istreambuf_iterator<char>(s1)), {});
  std::string b2((std::istreambuf_iterator<char>(s2)), {});
  CHECK(b1 == b2);
}

TEST_CASE("checkpoint round trip is bitwise exact") {
  ArchSpec arch;
  arch.channels = 6;
  arch.modes = 4;
  arch.layers = 2;
  arch.levels = 2;
  arch.shared_level0 = true;
  arch.scale_informed = true;
  arch.freq_embedding = true;
  arch.spectral_norm = true;
  SinoModel model = SinoModel::init(arch, 8, 1, 7);

  Checkpoint ck = checkpoint_from(model, Json{{"note", "test"}});
  ck.adam_t = 12;
  ck.adam_m.push_back(VectorX::Random(10));
  ck.adam_v.push_back(VectorX::Random(10));
  ck.metric_history.push_back({{"epoch", 0}, {"train_loss", 0.5}});

  TempFile f("ck.msck");
  save_checkpoint(f.path, ck);
  Checkpoint back = load_checkpoint(f.path);

  CHECK(back.arch.channels == arch.channels);
  CHECK(back.arch.scale_informed == arch.scale_informed);
  CHECK(back.in_channels == 8);
  CHECK(back.adam_t == 12);
  REQUIRE(back.params.size() == ck.params.size());
  for (size_t i = 0; i < ck.params.size(); ++i) {
    CHECK(back.params.item(i).first == ck.params.item(i).first);
    CHECK(tensors_equal(back.params.item(i).second, ck.params.item(i).second));
  }
  CHECK((back.adam_m[0] - ck.adam_m[0]).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.adam_v[0] - ck.adam_v[0]).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.metric_history[0]["train_loss"] == 0.5);

  // model reconstruction evaluates identically
  SinoModel restored = model_from_checkpoint(back);
  PdeInstance inst = make_darcy_instance(4.0, 9, 9);
  CHECK((sino_eval(restored, inst) - sino_eval(model, inst))
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("corrupt files are rejected with IoError") {
  TempFile f("bad.mspd");
  {
    std::ofstream os(f.path, std::ios::binary);
    os << "NOTAMAGIC and then some garbage";
  }
  CHECK_THROWS_AS(load_dataset(f.path), IoError);
  CHECK_THROWS_AS(load_checkpoint(f.path), IoError);
  CHECK_THROWS_AS(load_dataset("/tmp/definitely_missing_scaleop.mspd"), IoError);

  // version mismatch
  Dataset ds;
  ds.instances.push_back(make_darcy_instance(4.0, 9, 1));
  TempFile f2("ver.mspd");
  save_dataset(f2.path, ds);
  {
    // flip a byte inside the manifest's format_version digits
    std::fstream fs(f2.path, std::ios::in | std::ios::out | std::ios::binary);
    std::string head(200, '\0');
    fs.read(head.data(), 200);
    auto pos = head.find("\"format_version\":1");
    REQUIRE(pos != std::string::npos);
    fs.seekp(static_cast<std::streamoff>(pos + 17));
    fs.put('9');
  }
  CHECK_THROWS_AS(load_dataset(f2.path), IoError);
}

TEST_CASE("metrics stream writes one JSON record per line") {
  TempFile f("metrics.ndjson");
  {
    MetricsWriter w(f.path);
    EpochMetrics em;
    em.epoch = 0;
    em.train_loss = 0.25;
    w.write(epoch_to_json(em));
    em.epoch = 1;
    em.train_loss = 0.125;
    w.write(epoch_to_json(em));
  }
  std::ifstream is(f.path);
  std::string line;
  int lines = 0;
  while (std::getline(is, line)) {
    Json rec = Json::parse(line);
    CHECK(rec["epoch"] == lines);
    ++lines;
  }
  CHECK(lines == 2);
}

TEST_CASE("domain json round trip") {
  Domain d({Axis{0.25, 0.5, 65, false, false}, Axis{0.0, 1.0, 32, false, true}},
           1, true);
  Domain back = domain_from_json(domain_to_json(d));
  CHECK(back.same_shape(d));
  CHECK(back.axes[0].origin == 0.25);
  CHECK(back.axes[1].cell_start);
  CHECK(back.has_time);
}
