#include "maskval/scene_io.h"

#include <fstream>
#include <set>
#include <sstream>

namespace maskval {
namespace {

using nlohmann::json;

const json& Member(const json& obj, const std::string& key,
                   const std::string& path) {
  if (!obj.is_object()) throw SceneFormatError(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw SceneFormatError(path + "." + key, "missing required field");
  }
  return *it;
}

const json* OptionalMember(const json& obj, const std::string& key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return nullptr;
  return &*it;
}

double AsNumber(const json& j, const std::string& path) {
  if (!j.is_number()) throw SceneFormatError(path, "expected a number");
  return j.get<double>();
}

std::int64_t AsInt(const json& j, const std::string& path) {
  if (!j.is_number_integer()) {
    throw SceneFormatError(path, "expected an integer");
  }
  return j.get<std::int64_t>();
}

std::string AsString(const json& j, const std::string& path) {
  if (!j.is_string()) throw SceneFormatError(path, "expected a string");
  return j.get<std::string>();
}

bool AsBool(const json& j, const std::string& path) {
  if (!j.is_boolean()) throw SceneFormatError(path, "expected a boolean");
  return j.get<bool>();
}

const json& AsArray(const json& j, const std::string& path,
                    std::optional<std::size_t> size = std::nullopt) {
  if (!j.is_array()) throw SceneFormatError(path, "expected an array");
  if (size && j.size() != *size) {
    throw SceneFormatError(path,
                           "expected " + std::to_string(*size) + " elements");
  }
  return j;
}

std::string Index(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

json PoseToJson(const Pose& pose) {
  json rot = json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) rot.push_back(pose.rotation()(r, c));
  }
  const Vec3& t = pose.translation();
  return json{{"rotation", rot}, {"translation", {t.x(), t.y(), t.z()}}};
}

Pose PoseFromJson(const json& obj, const std::string& path) {
  const std::string rpath = path + ".rotation";
  const std::string tpath = path + ".translation";
  const json& rot = AsArray(Member(obj, "rotation", path), rpath, 9);
  const json& trans = AsArray(Member(obj, "translation", path), tpath, 3);
  Mat3 r;
  for (int i = 0; i < 9; ++i) r(i / 3, i % 3) = AsNumber(rot[i], Index(rpath, i));
  Vec3 t;
  for (int i = 0; i < 3; ++i) t[i] = AsNumber(trans[i], Index(tpath, i));
  try {
    return Pose::FromApproximateRotation(r, t);
  } catch (const std::invalid_argument& e) {
    throw SceneFormatError(rpath, e.what());
  }
}

void PutInstanceId(json& obj, const std::optional<std::int64_t>& id) {
  if (id) obj["instance_id"] = *id;
}

std::optional<std::int64_t> InstanceIdFromJson(const json& obj,
                                               const std::string& path) {
  if (const json* j = OptionalMember(obj, "instance_id")) {
    return AsInt(*j, path + ".instance_id");
  }
  return std::nullopt;
}

json EstimateToJson(const PoseEstimate& e) {
  json obj = PoseToJson(e.pose);
  obj["class"] = e.class_name;
  PutInstanceId(obj, e.instance_id);
  if (e.true_mdd) obj["true_mdd"] = *e.true_mdd;
  if (e.maskval) {
    const auto& m = *e.maskval;
    json mv{{"c", m.certainty},         {"v", m.visibility},
            {"u", m.uncertainty},       {"truncated", m.truncated},
            {"unmatched", m.unmatched}, {"empty_render", m.empty_render}};
    mv["matched_mask"] =
        m.matched_mask ? json(*m.matched_mask) : json(nullptr);
    obj["maskval"] = mv;
  }
  if (e.ensemble_add) {
    const auto& a = *e.ensemble_add;
    json ea{{"u", a.uncertainty}};
    ea["add"] = a.disagreement ? json(*a.disagreement) : json(nullptr);
    obj["ensemble_add"] = ea;
  }
  return obj;
}

PoseEstimate EstimateFromJson(const json& obj, const std::string& path) {
  PoseEstimate e;
  e.pose = PoseFromJson(obj, path);
  e.class_name = AsString(Member(obj, "class", path), path + ".class");
  e.instance_id = InstanceIdFromJson(obj, path);
  if (const json* j = OptionalMember(obj, "true_mdd")) {
    e.true_mdd = AsNumber(*j, path + ".true_mdd");
  }
  if (const json* j = OptionalMember(obj, "maskval")) {
    const std::string mp = path + ".maskval";
    EstimateUncertainty m;
    m.certainty = AsNumber(Member(*j, "c", mp), mp + ".c");
    m.visibility = AsNumber(Member(*j, "v", mp), mp + ".v");
    m.uncertainty = AsNumber(Member(*j, "u", mp), mp + ".u");
    m.truncated = AsBool(Member(*j, "truncated", mp), mp + ".truncated");
    m.unmatched = AsBool(Member(*j, "unmatched", mp), mp + ".unmatched");
    if (const json* f = OptionalMember(*j, "empty_render")) {
      m.empty_render = AsBool(*f, mp + ".empty_render");
    }
    if (const json* k = OptionalMember(*j, "matched_mask")) {
      const std::int64_t idx = AsInt(*k, mp + ".matched_mask");
      if (idx < 0) throw SceneFormatError(mp + ".matched_mask", "negative index");
      m.matched_mask = static_cast<std::size_t>(idx);
    }
    e.maskval = m;
  }
  if (const json* j = OptionalMember(obj, "ensemble_add")) {
    const std::string ap = path + ".ensemble_add";
    EnsembleResult a;
    a.uncertainty = AsNumber(Member(*j, "u", ap), ap + ".u");
    if (const json* d = OptionalMember(*j, "add")) {
      a.disagreement = AsNumber(*d, ap + ".add");
    }
    e.ensemble_add = a;
  }
  return e;
}

template <typename T, typename GetId>
void CheckUniqueIds(const std::vector<T>& items, GetId get_id,
                    const std::string& path) {
  std::set<std::int64_t> seen;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto id = get_id(items[i]);
    if (id && !seen.insert(*id).second) {
      throw SceneFormatError(Index(path, i) + ".instance_id",
                             "duplicate instance id " + std::to_string(*id));
    }
  }
}

}  // namespace

void SceneRecord::Validate() const {
  try {
    camera.Validate();
  } catch (const std::invalid_argument& e) {
    throw SceneFormatError("$.camera", e.what());
  }
  for (std::size_t i = 0; i < ground_truth.size(); ++i) {
    const double vf = ground_truth[i].visible_fraction;
    if (!(vf >= 0.0 && vf <= 1.0)) {
      throw SceneFormatError(Index("$.ground_truth", i) + ".visible_fraction",
                             "must lie in [0, 1]");
    }
  }
  for (std::size_t i = 0; i < segmentation.size(); ++i) {
    const auto& m = segmentation[i].mask;
    if (m.width() != camera.width || m.height() != camera.height) {
      throw SceneFormatError(Index("$.segmentation", i),
                             "mask size does not match the camera");
    }
  }
  CheckUniqueIds(ground_truth, [](const auto& g) { return g.instance_id; },
                 "$.ground_truth");
  CheckUniqueIds(segmentation, [](const auto& s) { return s.instance_id; },
                 "$.segmentation");
  for (const auto& [name, list] : estimates) {
    CheckUniqueIds(list, [](const auto& e) { return e.instance_id; },
                   "$.estimates." + name);
  }
}

const std::vector<PoseEstimate>* SceneRecord::Stream(
    const std::string& name) const {
  auto it = estimates.find(name);
  return it == estimates.end() ? nullptr : &it->second;
}

std::vector<std::uint32_t> EncodeRle(const BinaryMask& mask) {
  std::vector<std::uint32_t> runs;
  std::uint8_t current = 0;
  std::uint32_t length = 0;
  for (auto v : mask.data()) {
    if (v != current) {
      runs.push_back(length);
      current = v;
      length = 0;
    }
    ++length;
  }
  runs.push_back(length);
  return runs;
}

BinaryMask DecodeRle(const std::vector<std::uint32_t>& runs, int width,
                     int height) {
  BinaryMask mask(width, height, 0);
  auto& data = mask.data();
  std::size_t pos = 0;
  std::uint8_t value = 0;
  for (auto run : runs) {
    if (run > data.size() - pos) {
      throw std::invalid_argument("RLE runs exceed " + std::to_string(width) +
                                  "x" + std::to_string(height) + " pixels");
    }
    std::fill_n(data.begin() + pos, run, value);
    pos += run;
    value ^= 1;
  }
  if (pos != data.size()) {
    throw std::invalid_argument("RLE covers " + std::to_string(pos) + " of " +
                                std::to_string(data.size()) + " pixels");
  }
  return mask;
}

nlohmann::json SceneToJson(const SceneRecord& scene) {
  json doc;
  doc["image_id"] = scene.image_id;
  const auto& k = scene.camera;
  doc["camera"] = {{"fx", k.fx}, {"fy", k.fy},       {"cx", k.cx},
                   {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
  json gts = json::array();
  for (const auto& g : scene.ground_truth) {
    json obj = PoseToJson(g.pose);
    obj["class"] = g.class_name;
    obj["visible_fraction"] = g.visible_fraction;
    PutInstanceId(obj, g.instance_id);
    gts.push_back(obj);
  }
  doc["ground_truth"] = gts;
  json segs = json::array();
  for (const auto& s : scene.segmentation) {
    json obj{{"class", s.class_name}, {"rle", EncodeRle(s.mask)}};
    PutInstanceId(obj, s.instance_id);
    segs.push_back(obj);
  }
  doc["segmentation"] = segs;
  json streams = json::object();
  for (const auto& [name, list] : scene.estimates) {
    json arr = json::array();
    for (const auto& e : list) arr.push_back(EstimateToJson(e));
    streams[name] = arr;
  }
  doc["estimates"] = streams;
  return doc;
}

SceneRecord SceneFromJson(const nlohmann::json& doc) {
  SceneRecord scene;
  const std::string root = "$";
  if (!doc.is_object()) throw SceneFormatError(root, "expected an object");
  scene.image_id =
      AsString(Member(doc, "image_id", root), root + ".image_id");

  const std::string cp = "$.camera";
  const json& cam = Member(doc, "camera", root);
  scene.camera.fx = AsNumber(Member(cam, "fx", cp), cp + ".fx");
  scene.camera.fy = AsNumber(Member(cam, "fy", cp), cp + ".fy");
  scene.camera.cx = AsNumber(Member(cam, "cx", cp), cp + ".cx");
  scene.camera.cy = AsNumber(Member(cam, "cy", cp), cp + ".cy");
  const std::int64_t w = AsInt(Member(cam, "width", cp), cp + ".width");
  const std::int64_t h = AsInt(Member(cam, "height", cp), cp + ".height");
  if (w < 1 || h < 1 || w > (1 << 20) || h > (1 << 20)) {
    throw SceneFormatError(cp, "image size out of range");
  }
  scene.camera.width = static_cast<int>(w);
  scene.camera.height = static_cast<int>(h);
  try {
    scene.camera.Validate();
  } catch (const std::invalid_argument& e) {
    throw SceneFormatError(cp, e.what());
  }

  const std::string gp = "$.ground_truth";
  const json& gts = AsArray(Member(doc, "ground_truth", root), gp);
  for (std::size_t i = 0; i < gts.size(); ++i) {
    const std::string p = Index(gp, i);
    GroundTruthObject g;
    g.pose = PoseFromJson(gts[i], p);
    g.class_name = AsString(Member(gts[i], "class", p), p + ".class");
    g.visible_fraction = AsNumber(Member(gts[i], "visible_fraction", p),
                                  p + ".visible_fraction");
    g.instance_id = InstanceIdFromJson(gts[i], p);
    scene.ground_truth.push_back(std::move(g));
  }

  const std::string sp = "$.segmentation";
  const json& segs = AsArray(Member(doc, "segmentation", root), sp);
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const std::string p = Index(sp, i);
    SegmentationEntry s;
    s.class_name = AsString(Member(segs[i], "class", p), p + ".class");
    s.instance_id = InstanceIdFromJson(segs[i], p);
    const json& rle = AsArray(Member(segs[i], "rle", p), p + ".rle");
    std::vector<std::uint32_t> runs;
    runs.reserve(rle.size());
    for (std::size_t r = 0; r < rle.size(); ++r) {
      const std::int64_t v = AsInt(rle[r], Index(p + ".rle", r));
      if (v < 0 || v > UINT32_MAX) {
        throw SceneFormatError(Index(p + ".rle", r), "run length out of range");
      }
      runs.push_back(static_cast<std::uint32_t>(v));
    }
    try {
      s.mask = DecodeRle(runs, scene.camera.width, scene.camera.height);
    } catch (const std::invalid_argument& e) {
      throw SceneFormatError(p + ".rle",
                             std::string(e.what()) +
                                 " (mask size must match the camera)");
    }
    scene.segmentation.push_back(std::move(s));
  }

  const std::string ep = "$.estimates";
  if (const json* streams = OptionalMember(doc, "estimates")) {
    if (!streams->is_object()) throw SceneFormatError(ep, "expected an object");
    for (const auto& [name, list] : streams->items()) {
      const std::string lp = ep + "." + name;
      AsArray(list, lp);
      auto& out = scene.estimates[name];
      for (std::size_t i = 0; i < list.size(); ++i) {
        out.push_back(EstimateFromJson(list[i], Index(lp, i)));
      }
    }
  }
  scene.Validate();
  return scene;
}

std::string FormatScene(const SceneRecord& scene) {
  return SceneToJson(scene).dump(1) + "\n";
}

SceneRecord ParseScene(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SceneFormatError("$", std::string("invalid JSON: ") + e.what());
  }
  return SceneFromJson(doc);
}

void SaveScene(const std::filesystem::path& path, const SceneRecord& scene) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write scene file " + path.string());
  out << FormatScene(scene);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

SceneRecord LoadScene(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open scene file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return ParseScene(buf.str());
  } catch (const SceneFormatError& e) {
    throw SceneFormatError(path.string() + ":" + e.path(),
                           std::string(e.what()).substr(e.path().size() + 2));
  }
}

}  // namespace maskval
