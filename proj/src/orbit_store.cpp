#include "nip/orbit_store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <set>
#include <sstream>

namespace nip {

namespace {

constexpr char kMagic[4] = {'N', 'I', 'P', 'O'};
constexpr uint32_t kVersion = 1;
constexpr uint8_t kDtypeF32 = 0;
constexpr size_t kMaxIdBytes = 256;

void check_shape(const OrbitShape& s) {
  if (s.n_rot < 1 || s.n_scale < 1 || s.channels < 1 || s.height < 1 ||
      s.width < 1)
    throw ValidationError("orbit dimensions must all be >= 1, got " + s.str());
}

void check_id(const std::string& id) {
  if (id.empty()) throw ValidationError("empty image id");
  if (id.size() > kMaxIdBytes)
    throw ValidationError("image id longer than 256 bytes: " + id.substr(0, 32) + "...");
}

}  // namespace

std::string OrbitShape::str() const {
  std::ostringstream os;
  os << "[" << n_rot << "][" << n_scale << "][" << channels << "][" << height
     << "][" << width << "]";
  return os.str();
}

void check_orbit_invariants(const OrbitTensor& t) {
  check_shape(t.shape);
  check_id(t.image_id);
  if (t.data.size() != t.shape.elements())
    throw ShapeMismatch("orbit '" + t.image_id + "' has " +
                        std::to_string(t.data.size()) + " values, shape " +
                        t.shape.str() + " wants " +
                        std::to_string(t.shape.elements()));
  for (size_t i = 0; i < t.data.size(); ++i) {
    float v = t.data[i];
    if (!std::isfinite(v))
      throw ValidationError("orbit '" + t.image_id +
                            "' has non-finite value at flat index " +
                            std::to_string(i));
    if (v < 0.0f)
      throw ValidationError("orbit '" + t.image_id +
                            "' has negative value at flat index " +
                            std::to_string(i));
  }
}

void write_store(const std::string& path, const OrbitShape& shape,
                 const std::vector<std::string>& ids,
                 const std::function<void(const std::string& id,
                                          std::vector<float>& out)>& fill,
                 const Metadata& meta) {
  if (ids.empty()) throw ValidationError("store must contain at least one orbit");
  check_shape(shape);
  std::vector<std::string> sorted = ids;
  std::sort(sorted.begin(), sorted.end());
  for (size_t i = 0; i < sorted.size(); ++i) {
    check_id(sorted[i]);
    if (i > 0 && sorted[i] == sorted[i - 1])
      throw ValidationError("duplicate image id '" + sorted[i] + "'");
  }

  BinWriter w(path);
  w.bytes(kMagic, 4);
  w.u32(kVersion);
  w.u64(sorted.size());
  w.u32(shape.n_rot);
  w.u32(shape.n_scale);
  w.u32(shape.channels);
  w.u32(shape.height);
  w.u32(shape.width);
  w.u8(kDtypeF32);
  meta.write(w);

  uint64_t index_bytes = 0;
  for (const auto& id : sorted) index_bytes += 2 + id.size() + 8;
  uint64_t payload_start = w.tell() + index_bytes;
  const uint64_t record_bytes = shape.elements() * 4;
  for (size_t i = 0; i < sorted.size(); ++i) {
    w.str(sorted[i]);
    w.u64(payload_start + i * record_bytes);
  }

  std::vector<float> buf;
  OrbitTensor scratch;
  scratch.shape = shape;
  for (const auto& id : sorted) {
    buf.clear();
    fill(id, buf);
    scratch.image_id = id;
    scratch.data = std::move(buf);
    check_orbit_invariants(scratch);
    w.f32_array(scratch.data.data(), scratch.data.size());
    buf = std::move(scratch.data);
  }
  w.close();
}

void write_store(const std::vector<OrbitTensor>& records,
                 const std::string& path, const Metadata& meta) {
  if (records.empty())
    throw ValidationError("store must contain at least one orbit");
  const OrbitShape& shape = records.front().shape;
  std::vector<std::string> ids;
  ids.reserve(records.size());
  for (const auto& r : records) {
    if (!(r.shape == shape))
      throw ShapeMismatch("orbit '" + r.image_id + "' has shape " +
                          r.shape.str() + ", store shape is " + shape.str());
    check_orbit_invariants(r);  // reject bad records before touching the file
    ids.push_back(r.image_id);
  }
  write_store(path, shape, ids,
              [&](const std::string& id, std::vector<float>& out) {
                for (const auto& r : records)
                  if (r.image_id == id) {
                    out = r.data;
                    return;
                  }
              },
              meta);
}

OrbitStore::OrbitStore(const std::string& path) {
  BinReader reader(path);
  file_size_ = reader.size();
  char magic[4];
  reader.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw CorruptStore("bad magic in '" + path + "' (not a NIPO store)");
  uint32_t version = reader.u32();
  if (version != kVersion)
    throw CorruptStore("unsupported store version " + std::to_string(version));
  header_n_images_ = reader.u64();
  shape_.n_rot = reader.u32();
  shape_.n_scale = reader.u32();
  shape_.channels = reader.u32();
  shape_.height = reader.u32();
  shape_.width = reader.u32();
  uint8_t dtype = reader.u8();
  if (dtype != kDtypeF32)
    throw CorruptStore("unsupported dtype code " + std::to_string(dtype));
  check_shape(shape_);
  meta_ = Metadata::read(reader);

  // The index is self-delimiting: the first entry's payload offset marks the
  // end of the index region, so a forged header count is detectable.
  if (header_n_images_ == 0) throw CorruptStore("store declares zero records");
  uint64_t index_end = 0;
  bool first = true;
  while (first || reader.tell() < index_end) {
    std::string id = reader.str();
    uint64_t off = reader.u64();
    if (first) {
      index_end = off;
      if (index_end < reader.tell())
        throw CorruptStore("first payload offset precedes index end");
      first = false;
    }
    ids_.push_back(std::move(id));
    offsets_.push_back(off);
  }
  if (reader.tell() != index_end)
    throw CorruptStore("index region does not align with first payload");
  if (ids_.size() != header_n_images_)
    throw CorruptStore("header n_images=" + std::to_string(header_n_images_) +
                       " but index has " + std::to_string(ids_.size()) +
                       " entries");

  fd_ = ::open(path.c_str(), O_RDONLY);
  if (fd_ < 0) throw IoError("cannot reopen '" + path + "' for payload reads");
}

OrbitStore::~OrbitStore() {
  if (fd_ >= 0) ::close(fd_);
}

bool OrbitStore::contains(const std::string& image_id) const {
  return std::binary_search(ids_.begin(), ids_.end(), image_id);
}

OrbitTensor OrbitStore::read_orbit(const std::string& image_id) const {
  auto it = std::lower_bound(ids_.begin(), ids_.end(), image_id);
  if (it == ids_.end() || *it != image_id)
    throw NotFound("image id '" + image_id + "' not in store");
  return read_orbit_at(static_cast<size_t>(it - ids_.begin()));
}

OrbitTensor OrbitStore::read_orbit_at(size_t pos) const {
  if (pos >= ids_.size()) throw NotFound("record index out of range");
  OrbitTensor t;
  t.image_id = ids_[pos];
  t.shape = shape_;
  const uint64_t n = shape_.elements();
  if (offsets_[pos] + n * 4 > file_size_)
    throw CorruptStore("payload of '" + t.image_id +
                       "' extends past end of file");
  t.data.resize(n);
  uint8_t* dst = reinterpret_cast<uint8_t*>(t.data.data());
  uint64_t remaining = n * 4;
  uint64_t off = offsets_[pos];
  while (remaining > 0) {
    ssize_t got = ::pread(fd_, dst, remaining, static_cast<off_t>(off));
    if (got <= 0)
      throw CorruptStore("payload read of '" + t.image_id + "' failed");
    dst += got;
    off += static_cast<uint64_t>(got);
    remaining -= static_cast<uint64_t>(got);
  }
  return t;
}

std::string ValidationReport::str() const {
  std::ostringstream os;
  os << (passed ? "PASS" : "FAIL") << ": " << records_checked
     << " records checked, " << findings.size() << " findings\n";
  for (const auto& f : findings) {
    os << "  [" << f.check << "]";
    if (!f.record_id.empty()) os << " record=" << f.record_id;
    if (f.flat_index >= 0) os << " flat_index=" << f.flat_index;
    os << " " << f.detail << "\n";
  }
  return os.str();
}

ValidationReport validate_store(const std::string& path) {
  ValidationReport report;
  std::unique_ptr<OrbitStore> store;
  try {
    store = std::make_unique<OrbitStore>(path);
  } catch (const Error& e) {
    report.findings.push_back({"", "header", e.what(), -1});
    report.passed = false;
    return report;
  }
  const uint64_t n = store->shape().elements();
  for (size_t pos = 0; pos < store->size(); ++pos) {
    const std::string& id = store->ids()[pos];
    ++report.records_checked;
    if (store->offsets_[pos] + n * 4 > store->file_size_) {
      report.findings.push_back(
          {id, "shape", "payload truncated or offset out of range", -1});
      continue;
    }
    OrbitTensor t = store->read_orbit_at(pos);
    for (size_t i = 0; i < t.data.size(); ++i) {
      float v = t.data[i];
      if (!std::isfinite(v))
        report.findings.push_back(
            {id, "finite", "non-finite value", static_cast<int64_t>(i)});
      else if (v < 0.0f)
        report.findings.push_back(
            {id, "non-negative", "negative value", static_cast<int64_t>(i)});
    }
  }
  report.passed = report.findings.empty();
  return report;
}

GroundTruth load_ground_truth(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw IoError("cannot open ground truth '" + path + "'");
  std::string content;
  {
    char buf[1 << 14];
    size_t got;
    while ((got = std::fread(buf, 1, sizeof(buf), f)) > 0)
      content.append(buf, got);
    std::fclose(f);
  }

  GroundTruth gt;
  size_t pos = 0;
  size_t line_no = 0;
  while (pos < content.size()) {
    size_t eol = content.find('\n', pos);
    if (eol == std::string::npos) eol = content.size();
    std::string line = content.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw ParseError("line " + std::to_string(line_no) + ": missing TAB");
    std::string qid = line.substr(0, tab);
    if (qid.empty())
      throw ParseError("line " + std::to_string(line_no) + ": empty query id");

    std::set<std::string> rel;
    std::string rest = line.substr(tab + 1);
    size_t start = 0;
    while (start <= rest.size()) {
      size_t comma = rest.find(',', start);
      if (comma == std::string::npos) comma = rest.size();
      std::string id = rest.substr(start, comma - start);
      if (id.empty())
        throw ParseError("line " + std::to_string(line_no) +
                         ": empty relevant id");
      rel.insert(id);
      start = comma + 1;
      if (comma == rest.size()) break;
    }
    if (rel.empty())
      throw ParseError("line " + std::to_string(line_no) +
                       ": empty relevant set");
    gt.queries.push_back({std::move(qid),
                          std::vector<std::string>(rel.begin(), rel.end())});
  }
  return gt;
}

void write_ground_truth(const GroundTruth& gt, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  for (const auto& q : gt.queries) {
    std::string line = q.query_id + "\t";
    for (size_t i = 0; i < q.relevant.size(); ++i) {
      if (i) line += ',';
      line += q.relevant[i];
    }
    line += '\n';
    if (std::fwrite(line.data(), 1, line.size(), f) != line.size()) {
      std::fclose(f);
      throw IoError("short write to '" + path + "'");
    }
  }
  if (std::fclose(f) != 0) throw IoError("close failed for '" + path + "'");
}

}  // namespace nip
