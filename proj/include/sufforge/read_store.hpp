#pragma once

#include "sufforge/encoding.hpp"
#include "sufforge/read.hpp"
#include "sufforge/wire.hpp"

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

namespace sufforge {

constexpr std::size_t shard_of(std::uint64_t seq, std::size_t shard_count) noexcept {
    return static_cast<std::size_t>(seq % shard_count);
}

struct Endpoint {
    std::string host;
    std::uint16_t port = 0;

    std::string to_string() const { return host + ":" + std::to_string(port); }
    friend bool operator==(const Endpoint&, const Endpoint&) = default;
};

/// Parses "HOST:PORT"; throws ConfigError.
Endpoint parse_endpoint(std::string_view text);

/// One partition of the read store. Owns the reads whose seq maps to its
/// index and refuses the rest. All commands are linearizable.
class Shard {
public:
    Shard(std::size_t index, std::size_t shard_count);

    std::size_t index() const noexcept { return index_; }
    std::size_t shard_count() const noexcept { return shard_count_; }

    wire::MputAck mput(std::span<const Read> reads);
    std::optional<std::string> get(std::uint64_t seq) const;
    std::vector<wire::SuffixItem> mget_suffix(std::span<const SuffixIndex> indexes) const;

    /// Decodes one request frame, executes it and encodes the reply.
    wire::Bytes handle(std::span<const std::uint8_t> frame);

    std::size_t read_count() const;
    /// Sum of stored text lengths.
    std::size_t text_bytes() const;
    /// Rough resident size of the table (text, node and bucket overhead).
    std::size_t footprint_bytes() const;

private:
    bool owns(std::uint64_t seq) const noexcept { return shard_of(seq, shard_count_) == index_; }

    std::size_t index_;
    std::size_t shard_count_;
    mutable std::shared_mutex mutex_;
    std::unordered_map<std::uint64_t, std::string> reads_;
    std::size_t text_bytes_ = 0;
};

/// Serves one shard over TCP. A thread accepts connections and each
/// connection gets its own thread.
class ShardServer {
public:
    ShardServer(Shard& shard, const Endpoint& listen);
    ~ShardServer();

    ShardServer(const ShardServer&) = delete;
    ShardServer& operator=(const ShardServer&) = delete;

    /// Bound port; differs from the requested one when that was 0.
    std::uint16_t port() const noexcept { return port_; }
    Endpoint endpoint() const { return {host_, port_}; }

    void stop();

private:
    void accept_loop();
    void serve_connection(int fd);

    Shard& shard_;
    std::string host_;
    std::uint16_t port_ = 0;
    int listen_fd_ = -1;
    std::atomic<bool> stopping_{false};
    std::mutex conn_mutex_;
    std::vector<int> conn_fds_;
    std::vector<std::thread> conn_threads_;
    std::thread acceptor_;
};

/// Request/response channel to one shard.
class ShardConnection {
public:
    virtual ~ShardConnection() = default;
    /// Sends one request frame and returns the reply frame. Throws
    /// TransportError.
    virtual wire::Bytes call(std::span<const std::uint8_t> frame) = 0;
};

/// Calls straight into a Shard in the same process, still through the wire
/// encoding.
class InProcessConnection final : public ShardConnection {
public:
    explicit InProcessConnection(Shard& shard) : shard_(shard) {}
    wire::Bytes call(std::span<const std::uint8_t> frame) override { return shard_.handle(frame); }

private:
    Shard& shard_;
};

class TcpConnection final : public ShardConnection {
public:
    explicit TcpConnection(const Endpoint& endpoint);
    ~TcpConnection() override;

    TcpConnection(const TcpConnection&) = delete;
    TcpConnection& operator=(const TcpConnection&) = delete;

    wire::Bytes call(std::span<const std::uint8_t> frame) override;

private:
    Endpoint endpoint_;
    int fd_ = -1;
};

/// Client over all shards. Not thread-safe; each worker opens its own via
/// StoreCluster::connect().
class StoreClient {
public:
    explicit StoreClient(std::vector<std::unique_ptr<ShardConnection>> shards);

    std::size_t shard_count() const noexcept { return shards_.size(); }

    /// Sends a batch already grouped for one shard.
    wire::MputAck mput_reads(std::size_t shard, std::span<const Read> batch);

    /// Throws NotFoundError when the read is absent.
    std::string get_read(std::uint64_t seq);

    /// One MGETSUFFIX call against one shard; replies align with indexes.
    std::vector<wire::SuffixItem> mget_suffix(std::size_t shard, std::span<const SuffixIndex> indexes);

    /// Groups indexes by owning shard, issues one call per shard and
    /// reassembles the replies in input order.
    std::vector<wire::SuffixItem> mget_suffix(std::span<const SuffixIndex> indexes);

private:
    wire::Bytes call(std::size_t shard, const wire::Request& request);

    std::vector<std::unique_ptr<ShardConnection>> shards_;
};

/// A set of shards clients can connect to.
class StoreCluster {
public:
    virtual ~StoreCluster() = default;
    virtual std::size_t shard_count() const = 0;
    virtual StoreClient connect() const = 0;
};

/// Shards reachable over TCP at fixed endpoints (shard i at endpoints[i]).
class RemoteCluster final : public StoreCluster {
public:
    explicit RemoteCluster(std::vector<Endpoint> endpoints);

    std::size_t shard_count() const override { return endpoints_.size(); }
    StoreClient connect() const override;

private:
    std::vector<Endpoint> endpoints_;
};

enum class EmbeddedTransport { in_process, tcp };

/// Shards living in this process; with EmbeddedTransport::tcp each one is
/// also served on a loopback port.
class EmbeddedCluster final : public StoreCluster {
public:
    EmbeddedCluster(std::size_t shard_count, EmbeddedTransport transport);
    ~EmbeddedCluster() override;

    std::size_t shard_count() const override { return shards_.size(); }
    StoreClient connect() const override;

    Shard& shard(std::size_t i) { return *shards_[i]; }
    const Shard& shard(std::size_t i) const { return *shards_[i]; }
    std::vector<Endpoint> endpoints() const;

private:
    EmbeddedTransport transport_;
    std::vector<std::unique_ptr<Shard>> shards_;
    std::vector<std::unique_ptr<ShardServer>> servers_;
};

} // namespace sufforge
