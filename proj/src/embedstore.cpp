#include "gedprobe/embedstore.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include "gedprobe/rng.hpp"

namespace gedprobe {

static_assert(std::endian::native == std::endian::little, "store I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'G', 'E', 'D', 'E'};

class Reader {
 public:
  explicit Reader(std::span<const std::byte> bytes) : bytes_(bytes) {}

  template <typename T>
  T get(std::string_view what) {
    need(sizeof(T), what);
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string string(std::string_view what) {
    const auto len = get<std::uint16_t>(what);
    need(len, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), len);
    pos_ += len;
    return s;
  }

  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n, std::string_view what) const {
    if (pos_ + n > bytes_.size()) {
      throw IntegrityError("store truncated at byte " + std::to_string(pos_) + " while reading " + std::string(what));
    }
  }

  std::span<const std::byte> bytes_;
  std::size_t pos_ = 0;
};

class Writer {
 public:
  template <typename T>
  void put(T v) {
    const auto* p = reinterpret_cast<const std::byte*>(&v);
    out_.insert(out_.end(), p, p + sizeof(T));
  }

  void string(std::string_view s) {
    if (s.size() > 0xFFFF) {
      throw IntegrityError("string too long for store: " + std::string(s.substr(0, 32)));
    }
    put(static_cast<std::uint16_t>(s.size()));
    const auto* p = reinterpret_cast<const std::byte*>(s.data());
    out_.insert(out_.end(), p, p + s.size());
  }

  void raw(std::span<const float> v) {
    const auto* p = reinterpret_cast<const std::byte*>(v.data());
    out_.insert(out_.end(), p, p + v.size_bytes());
  }

  std::vector<std::byte>& bytes() { return out_; }

 private:
  std::vector<std::byte> out_;
};

}  // namespace

class EmbeddingStore::Buffer {
 public:
  virtual ~Buffer() = default;
  virtual std::span<const std::byte> bytes() const = 0;
};

namespace {

class OwnedBuffer final : public EmbeddingStore::Buffer {
 public:
  explicit OwnedBuffer(std::vector<std::byte> bytes) : bytes_(std::move(bytes)) {}
  std::span<const std::byte> bytes() const override { return bytes_; }

 private:
  std::vector<std::byte> bytes_;
};

class MappedBuffer final : public EmbeddingStore::Buffer {
 public:
  explicit MappedBuffer(const std::filesystem::path& path) {
    fd_ = ::open(path.c_str(), O_RDONLY);
    if (fd_ < 0) {
      throw DataError("cannot open store " + path.string());
    }
    struct stat st {};
    if (::fstat(fd_, &st) != 0) {
      ::close(fd_);
      throw DataError("cannot stat store " + path.string());
    }
    size_ = static_cast<std::size_t>(st.st_size);
    if (size_ > 0) {
      void* p = ::mmap(nullptr, size_, PROT_READ, MAP_PRIVATE, fd_, 0);
      if (p == MAP_FAILED) {
        ::close(fd_);
        throw DataError("cannot map store " + path.string());
      }
      data_ = static_cast<const std::byte*>(p);
    }
  }

  MappedBuffer(const MappedBuffer&) = delete;
  MappedBuffer& operator=(const MappedBuffer&) = delete;

  ~MappedBuffer() override {
    if (data_ != nullptr) {
      ::munmap(const_cast<std::byte*>(data_), size_);
    }
    ::close(fd_);
  }

  std::span<const std::byte> bytes() const override { return {data_, size_}; }

 private:
  int fd_ = -1;
  const std::byte* data_ = nullptr;
  std::size_t size_ = 0;
};

}  // namespace

void validate_alignment(std::string_view id, std::size_t word_count, std::span<const std::int16_t> alignment) {
  std::vector<bool> covered(word_count, false);
  for (auto a : alignment) {
    if (a < -1 || (a >= 0 && static_cast<std::size_t>(a) >= word_count)) {
      throw IntegrityError("sentence " + std::string(id) + ": alignment value " + std::to_string(a) +
                           " outside -1.." + std::to_string(static_cast<long>(word_count) - 1));
    }
    if (a >= 0) {
      covered[static_cast<std::size_t>(a)] = true;
    }
  }
  for (std::size_t w = 0; w < word_count; ++w) {
    if (!covered[w]) {
      throw IntegrityError("sentence " + std::string(id) + ": word " + std::to_string(w) + " has no subword");
    }
  }
}

EmbeddingStore::EmbeddingStore(std::shared_ptr<const Buffer> buffer) : buffer_(std::move(buffer)) {}

EmbeddingStore EmbeddingStore::open(const std::filesystem::path& path) {
  EmbeddingStore store(std::make_shared<MappedBuffer>(path));
  store.parse();
  return store;
}

EmbeddingStore EmbeddingStore::from_bytes(std::vector<std::byte> bytes) {
  EmbeddingStore store(std::make_shared<OwnedBuffer>(std::move(bytes)));
  store.parse();
  return store;
}

std::span<const std::byte> EmbeddingStore::bytes() const { return buffer_->bytes(); }

void EmbeddingStore::parse() {
  const auto bytes = buffer_->bytes();
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("not an embedding store: bad magic");
  }
  Reader r(bytes.subspan(4));
  const auto version = r.get<std::uint32_t>("version");
  if (version != kStoreVersion) {
    throw FormatError("unsupported store version " + std::to_string(version));
  }
  flags_ = r.get<std::uint32_t>("flags");
  if ((flags_ & ~kFlagEmbeddingLayer) != 0) {
    throw FormatError("unknown store flags " + std::to_string(flags_));
  }
  layers_ = r.get<std::uint16_t>("layer count");
  dim_ = r.get<std::uint16_t>("hidden size");
  const auto count = r.get<std::uint64_t>("sentence count");
  model_name_ = r.string("model name");

  const std::size_t stored_layers = static_cast<std::size_t>(layers_) + (includes_embedding_layer() ? 1 : 0);
  index_.clear();
  by_id_.clear();
  for (std::uint64_t i = 0; i < count; ++i) {
    StoreSentence s;
    s.id = r.string("sentence id");
    s.word_count = r.get<std::uint16_t>("word count");
    const auto subwords = r.get<std::uint16_t>("subword count");
    s.alignment.resize(subwords);
    for (auto& a : s.alignment) {
      a = r.get<std::int16_t>("alignment");
    }
    s.payload_offset = r.get<std::uint64_t>("payload offset");
    validate_alignment(s.id, s.word_count, s.alignment);
    if (!by_id_.emplace(s.id, index_.size()).second) {
      throw IntegrityError("duplicate sentence id " + s.id);
    }
    index_.push_back(std::move(s));
  }

  std::uint64_t expected = 4 + r.pos();
  for (const auto& s : index_) {
    if (s.payload_offset != expected) {
      throw IntegrityError("sentence " + s.id + ": payload offset " + std::to_string(s.payload_offset) +
                           " does not match expected byte offset " + std::to_string(expected));
    }
    expected += stored_layers * s.subword_count() * dim_ * sizeof(float);
    if (expected > bytes.size()) {
      throw IntegrityError("store truncated: sentence " + s.id + " payload ends at byte " + std::to_string(expected) +
                           " but file has " + std::to_string(bytes.size()) + " bytes");
    }
  }
  if (expected != bytes.size()) {
    throw IntegrityError("store has " + std::to_string(bytes.size() - expected) +
                         " trailing bytes after payload at byte " + std::to_string(expected) +
                         "; header layer count or hidden size is inconsistent");
  }
}

const StoreSentence* EmbeddingStore::find(std::string_view id) const {
  const auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &index_[it->second];
}

void EmbeddingStore::copy_subword(const StoreSentence& s, int layer, std::size_t subword, std::span<float> out) const {
  const auto slot = static_cast<std::size_t>(layer - first_layer());
  const auto offset = s.payload_offset + ((slot * s.subword_count() + subword) * dim_) * sizeof(float);
  std::memcpy(out.data(), buffer_->bytes().data() + offset, dim_ * sizeof(float));
}

EmbeddingStore read_store(const std::filesystem::path& path) { return EmbeddingStore::open(path); }

void write_store(const EmbeddingStore& store, const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw DataError("cannot write store " + path.string());
  }
  const auto bytes = store.bytes();
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

WordMatrix word_vectors(const EmbeddingStore& store, std::string_view sentence_id, int layer) {
  const auto* s = store.find(sentence_id);
  if (s == nullptr) {
    throw DataError("sentence " + std::string(sentence_id) + " is not in store for " + store.model_name());
  }
  if (layer < store.first_layer() || layer > store.num_layers()) {
    throw std::out_of_range("layer " + std::to_string(layer) + " outside " + std::to_string(store.first_layer()) +
                            ".." + std::to_string(store.num_layers()));
  }
  WordMatrix m;
  m.sentence_id = s->id;
  m.layer = layer;
  m.dim = store.hidden_dim();
  m.data.resize(s->word_count * m.dim);
  // Later subwords overwrite earlier ones, leaving the last subword per word.
  for (std::size_t j = 0; j < s->subword_count(); ++j) {
    const auto w = s->alignment[j];
    if (w >= 0) {
      store.copy_subword(*s, layer, j, std::span<float>(m.data).subspan(static_cast<std::size_t>(w) * m.dim, m.dim));
    }
  }
  return m;
}

StoreBuilder::StoreBuilder(std::string model_name, int layers, std::size_t dim, bool include_embedding_layer)
    : model_name_(std::move(model_name)), layers_(layers), dim_(dim), include_layer0_(include_embedding_layer) {
  if (layers < 0 || layers > 0xFFFF || dim > 0xFFFF) {
    throw IntegrityError("layer count and hidden size must fit in 16 bits");
  }
}

void StoreBuilder::add_sentence(std::string id, std::size_t word_count, std::vector<std::int16_t> alignment,
                                std::span<const float> vectors) {
  if (word_count > 0xFFFF || alignment.size() > 0xFFFF) {
    throw IntegrityError("sentence " + id + " is too long for the store format");
  }
  validate_alignment(id, word_count, alignment);
  const auto expected = static_cast<std::size_t>(stored_layers()) * alignment.size() * dim_;
  if (vectors.size() != expected) {
    throw IntegrityError("sentence " + id + ": expected " + std::to_string(expected) + " floats, got " +
                         std::to_string(vectors.size()));
  }
  sentences_.push_back({std::move(id), word_count, std::move(alignment), {vectors.begin(), vectors.end()}});
}

std::vector<std::byte> StoreBuilder::finish() const {
  Writer w;
  for (char c : kMagic) {
    w.put(c);
  }
  w.put(kStoreVersion);
  w.put(include_layer0_ ? kFlagEmbeddingLayer : 0U);
  w.put(static_cast<std::uint16_t>(layers_));
  w.put(static_cast<std::uint16_t>(dim_));
  w.put(static_cast<std::uint64_t>(sentences_.size()));
  w.string(model_name_);

  std::size_t index_size = 0;
  for (const auto& s : sentences_) {
    index_size += 2 + s.id.size() + 2 + 2 + 2 * s.alignment.size() + 8;
  }
  std::uint64_t offset = w.bytes().size() + index_size;
  for (const auto& s : sentences_) {
    w.string(s.id);
    w.put(static_cast<std::uint16_t>(s.word_count));
    w.put(static_cast<std::uint16_t>(s.alignment.size()));
    for (auto a : s.alignment) {
      w.put(a);
    }
    w.put(offset);
    offset += s.vectors.size() * sizeof(float);
  }
  for (const auto& s : sentences_) {
    w.raw(s.vectors);
  }
  return std::move(w.bytes());
}

EmbeddingStore synthesize_store(std::span<const AnnotatedSentence> sentences, const SynthesisOptions& options) {
  if (options.dim < 2) {
    throw std::invalid_argument("synthetic stores need at least 2 dimensions");
  }
  Rng rng(options.seed);
  StoreBuilder builder(options.model_name, options.layers, options.dim);
  const double random_sigma = options.noise_sigma > 0.0 ? options.noise_sigma : 1.0;
  for (const auto& s : sentences) {
    const auto words = s.tokens.size();
    std::vector<float> one_layer(words * options.dim);
    for (std::size_t w = 0; w < words; ++w) {
      auto* row = one_layer.data() + w * options.dim;
      for (std::size_t k = 0; k < options.dim; ++k) {
        if (options.signal == SyntheticSignal::Random) {
          row[k] = static_cast<float>(random_sigma * rng.normal());
        } else {
          row[k] = static_cast<float>(options.noise_sigma * rng.normal());
        }
      }
      if (options.signal == SyntheticSignal::LinearSeparable) {
        const bool error = w < s.labels.size() && is_error_label(s.labels[w]);
        row[0] += static_cast<float>(error ? options.mean_offset : -options.mean_offset);
      }
    }
    std::vector<float> all;
    all.reserve(one_layer.size() * static_cast<std::size_t>(options.layers));
    for (int l = 0; l < options.layers; ++l) {
      all.insert(all.end(), one_layer.begin(), one_layer.end());
    }
    std::vector<std::int16_t> alignment(words);
    for (std::size_t w = 0; w < words; ++w) {
      alignment[w] = static_cast<std::int16_t>(w);
    }
    builder.add_sentence(s.source_id, words, std::move(alignment), all);
  }
  return builder.build();
}

}  // namespace gedprobe
