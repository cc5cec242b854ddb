#include "sufforge/read_store.hpp"

#include "sufforge/error.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>

namespace sufforge {

Endpoint parse_endpoint(std::string_view text) {
    const auto colon = text.rfind(':');
    if (colon == std::string_view::npos || colon == 0 || colon + 1 == text.size())
        throw ConfigError("endpoint '" + std::string(text) + "' is not HOST:PORT");
    unsigned port = 0;
    const auto digits = text.substr(colon + 1);
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), port);
    if (ec != std::errc{} || ptr != digits.data() + digits.size() || port > 65535)
        throw ConfigError("endpoint '" + std::string(text) + "' has an invalid port");
    return {std::string(text.substr(0, colon)), static_cast<std::uint16_t>(port)};
}

// ---------------------------------------------------------------------------
// Shard

Shard::Shard(std::size_t index, std::size_t shard_count) : index_(index), shard_count_(shard_count) {
    if (shard_count == 0 || index >= shard_count)
        throw ConfigError("shard index " + std::to_string(index) + " invalid for " +
                          std::to_string(shard_count) + " shards");
}

wire::MputAck Shard::mput(std::span<const Read> reads) {
    wire::MputAck ack;
    std::unique_lock lock(mutex_);
    for (std::size_t i = 0; i < reads.size(); ++i) {
        const Read& r = reads[i];
        if (!owns(r.seq)) {
            ack.rejected.push_back({static_cast<std::uint32_t>(i), wire::RejectReason::wrong_shard});
            continue;
        }
        if (!is_valid_read_text(r.text)) {
            ack.rejected.push_back({static_cast<std::uint32_t>(i), wire::RejectReason::invalid_read});
            continue;
        }
        auto [it, inserted] = reads_.try_emplace(r.seq);
        if (!inserted)
            text_bytes_ -= it->second.size();
        it->second = r.text;
        text_bytes_ += r.text.size();
        ++ack.stored;
    }
    return ack;
}

std::optional<std::string> Shard::get(std::uint64_t seq) const {
    if (!owns(seq))
        return std::nullopt;
    std::shared_lock lock(mutex_);
    auto it = reads_.find(seq);
    if (it == reads_.end())
        return std::nullopt;
    return it->second;
}

std::vector<wire::SuffixItem> Shard::mget_suffix(std::span<const SuffixIndex> indexes) const {
    std::vector<wire::SuffixItem> items(indexes.size());
    std::shared_lock lock(mutex_);
    for (std::size_t i = 0; i < indexes.size(); ++i) {
        const auto [seq, offset] = unpack_index(indexes[i]);
        auto it = owns(seq) ? reads_.find(seq) : reads_.end();
        if (it == reads_.end()) {
            items[i].status = wire::ItemStatus::not_found;
        } else if (offset >= it->second.size()) {
            items[i].status = wire::ItemStatus::range_error;
        } else {
            items[i].text.assign(it->second, offset);
        }
    }
    return items;
}

wire::Bytes Shard::handle(std::span<const std::uint8_t> frame) {
    if (frame.size() >= wire::kHeaderSize) {
        const auto op = frame[4];
        if (op < static_cast<std::uint8_t>(wire::Opcode::mput) ||
            op > static_cast<std::uint8_t>(wire::Opcode::mget_suffix))
            return wire::encode_reply(wire::Status::unknown_opcode);
    }
    wire::Request request;
    try {
        request = wire::decode_request(frame);
    } catch (const wire::ProtocolError&) {
        return wire::encode_reply(wire::Status::bad_request);
    }
    if (auto* mput_req = std::get_if<wire::MputRequest>(&request))
        return wire::encode_mput_reply(mput(mput_req->reads));
    if (auto* get_req = std::get_if<wire::GetRequest>(&request)) {
        auto text = get(get_req->seq);
        return wire::encode_get_reply(text ? &*text : nullptr);
    }
    const auto& indexes = std::get<wire::MgetSuffixRequest>(request).indexes;
    auto reply = wire::encode_mget_reply(mget_suffix(indexes));
#ifdef SUFFORGE_DEBUG_CHECKS
    // Every fetched slice must equal the stored text from its offset.
    const auto decoded = wire::decode_mget_reply(reply, indexes.size());
    for (std::size_t i = 0; i < indexes.size(); ++i) {
        if (decoded[i].status != wire::ItemStatus::ok)
            continue;
        const auto [seq, offset] = unpack_index(indexes[i]);
        const auto stored = get(seq);
        if (!stored || stored->compare(offset, std::string::npos, decoded[i].text) != 0)
            throw std::logic_error("MGETSUFFIX slice mismatch for index " + std::to_string(indexes[i].packed));
    }
#endif
    return reply;
}

std::size_t Shard::read_count() const {
    std::shared_lock lock(mutex_);
    return reads_.size();
}

std::size_t Shard::text_bytes() const {
    std::shared_lock lock(mutex_);
    return text_bytes_;
}

std::size_t Shard::footprint_bytes() const {
    std::shared_lock lock(mutex_);
    std::size_t total = reads_.bucket_count() * sizeof(void*);
    for (const auto& [seq, text] : reads_) {
        // Node: key, string object, next pointer, cached hash.
        total += sizeof(seq) + sizeof(std::string) + 2 * sizeof(void*);
        if (text.capacity() > 15)
            total += text.capacity() + 1;
    }
    return total;
}

// ---------------------------------------------------------------------------
// Socket helpers

namespace {

std::string errno_text() { return std::strerror(errno); }

bool read_exact(int fd, std::uint8_t* buf, std::size_t n) {
    std::size_t got = 0;
    while (got < n) {
        const ssize_t r = ::recv(fd, buf + got, n - got, 0);
        if (r == 0)
            return false;
        if (r < 0) {
            if (errno == EINTR)
                continue;
            return false;
        }
        got += static_cast<std::size_t>(r);
    }
    return true;
}

bool write_all(int fd, std::span<const std::uint8_t> data) {
    std::size_t sent = 0;
    while (sent < data.size()) {
        const ssize_t w = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
        if (w < 0) {
            if (errno == EINTR)
                continue;
            return false;
        }
        sent += static_cast<std::size_t>(w);
    }
    return true;
}

// Reads one frame; empty result on clean EOF or error.
std::optional<wire::Bytes> read_frame(int fd) {
    std::array<std::uint8_t, 4> prefix{};
    if (!read_exact(fd, prefix.data(), prefix.size()))
        return std::nullopt;
    const std::uint32_t n = wire::frame_length(prefix);
    if (n < wire::kHeaderSize || n > wire::kMaxFrameSize)
        return std::nullopt;
    wire::Bytes frame(n);
    std::copy(prefix.begin(), prefix.end(), frame.begin());
    if (!read_exact(fd, frame.data() + 4, n - 4))
        return std::nullopt;
    return frame;
}

struct AddrInfoDeleter {
    void operator()(addrinfo* ai) const { ::freeaddrinfo(ai); }
};

std::unique_ptr<addrinfo, AddrInfoDeleter> resolve(const Endpoint& ep, bool passive) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    if (passive)
        hints.ai_flags = AI_PASSIVE;
    addrinfo* res = nullptr;
    const std::string port = std::to_string(ep.port);
    const char* host = ep.host.empty() || ep.host == "*" ? nullptr : ep.host.c_str();
    if (int rc = ::getaddrinfo(host, port.c_str(), &hints, &res); rc != 0)
        throw TransportError("cannot resolve " + ep.to_string() + ": " + ::gai_strerror(rc));
    return std::unique_ptr<addrinfo, AddrInfoDeleter>(res);
}

} // namespace

// ---------------------------------------------------------------------------
// ShardServer

ShardServer::ShardServer(Shard& shard, const Endpoint& listen) : shard_(shard), host_(listen.host) {
    auto addrs = resolve(listen, true);
    std::string last_error = "no address";
    for (addrinfo* ai = addrs.get(); ai; ai = ai->ai_next) {
        int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) {
            last_error = errno_text();
            continue;
        }
        int one = 1;
        ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
        if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd, 128) == 0) {
            listen_fd_ = fd;
            break;
        }
        last_error = errno_text();
        ::close(fd);
    }
    if (listen_fd_ < 0)
        throw TransportError("cannot listen on " + listen.to_string() + ": " + last_error);

    sockaddr_storage bound{};
    socklen_t len = sizeof(bound);
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
    if (bound.ss_family == AF_INET)
        port_ = ntohs(reinterpret_cast<sockaddr_in*>(&bound)->sin_port);
    else
        port_ = ntohs(reinterpret_cast<sockaddr_in6*>(&bound)->sin6_port);
    if (host_.empty())
        host_ = "127.0.0.1";

    acceptor_ = std::thread([this] { accept_loop(); });
}

ShardServer::~ShardServer() { stop(); }

void ShardServer::stop() {
    if (stopping_.exchange(true))
        return;
    ::shutdown(listen_fd_, SHUT_RDWR);
    if (acceptor_.joinable())
        acceptor_.join();
    ::close(listen_fd_);
    std::vector<std::thread> threads;
    {
        std::lock_guard lock(conn_mutex_);
        for (int fd : conn_fds_)
            ::shutdown(fd, SHUT_RDWR);
        threads.swap(conn_threads_);
    }
    for (auto& t : threads)
        t.join();
}

void ShardServer::accept_loop() {
    while (!stopping_) {
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) {
            if (errno == EINTR || errno == ECONNABORTED)
                continue;
            return;
        }
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
        std::lock_guard lock(conn_mutex_);
        if (stopping_) {
            ::close(fd);
            return;
        }
        conn_fds_.push_back(fd);
        conn_threads_.emplace_back([this, fd] { serve_connection(fd); });
    }
}

void ShardServer::serve_connection(int fd) {
    while (auto frame = read_frame(fd)) {
        const auto reply = shard_.handle(*frame);
        if (!write_all(fd, reply))
            break;
    }
    std::lock_guard lock(conn_mutex_);
    std::erase(conn_fds_, fd);
    ::close(fd);
}

// ---------------------------------------------------------------------------
// TcpConnection

TcpConnection::TcpConnection(const Endpoint& endpoint) : endpoint_(endpoint) {
    auto addrs = resolve(endpoint, false);
    std::string last_error = "no address";
    for (addrinfo* ai = addrs.get(); ai; ai = ai->ai_next) {
        int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
        if (fd < 0) {
            last_error = errno_text();
            continue;
        }
        if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
            fd_ = fd;
            break;
        }
        last_error = errno_text();
        ::close(fd);
    }
    if (fd_ < 0)
        throw TransportError("cannot connect to shard at " + endpoint.to_string() + ": " + last_error);
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

TcpConnection::~TcpConnection() {
    if (fd_ >= 0)
        ::close(fd_);
}

wire::Bytes TcpConnection::call(std::span<const std::uint8_t> frame) {
    if (!write_all(fd_, frame))
        throw TransportError("send to " + endpoint_.to_string() + " failed: " + errno_text());
    auto reply = read_frame(fd_);
    if (!reply)
        throw TransportError("connection to " + endpoint_.to_string() + " closed mid-request");
    return std::move(*reply);
}

// ---------------------------------------------------------------------------
// StoreClient

StoreClient::StoreClient(std::vector<std::unique_ptr<ShardConnection>> shards) : shards_(std::move(shards)) {
    if (shards_.empty())
        throw ConfigError("a store client needs at least one shard");
}

wire::Bytes StoreClient::call(std::size_t shard, const wire::Request& request) {
    if (shard >= shards_.size())
        throw ConfigError("shard " + std::to_string(shard) + " out of range");
    return shards_[shard]->call(wire::encode_request(request));
}

namespace {

template <class F>
auto decode_or_transport(F&& f) {
    try {
        return f();
    } catch (const wire::ProtocolError& e) {
        throw TransportError(std::string("malformed reply: ") + e.what());
    }
}

} // namespace

wire::MputAck StoreClient::mput_reads(std::size_t shard, std::span<const Read> batch) {
    wire::MputRequest req{{batch.begin(), batch.end()}};
    auto reply = call(shard, req);
    return decode_or_transport([&] { return wire::decode_mput_reply(reply); });
}

std::string StoreClient::get_read(std::uint64_t seq) {
    auto reply = call(shard_of(seq, shards_.size()), wire::GetRequest{seq});
    auto text = decode_or_transport([&] { return wire::decode_get_reply(reply); });
    if (!text)
        throw NotFoundError("read " + std::to_string(seq) + " not found");
    return std::move(*text);
}

std::vector<wire::SuffixItem> StoreClient::mget_suffix(std::size_t shard, std::span<const SuffixIndex> indexes) {
    if (indexes.empty())
        return {};
    wire::MgetSuffixRequest req{{indexes.begin(), indexes.end()}};
    auto reply = call(shard, req);
    return decode_or_transport([&] { return wire::decode_mget_reply(reply, indexes.size()); });
}

std::vector<wire::SuffixItem> StoreClient::mget_suffix(std::span<const SuffixIndex> indexes) {
    const std::size_t n = shards_.size();
    std::vector<std::vector<SuffixIndex>> per_shard(n);
    std::vector<std::vector<std::size_t>> positions(n);
    for (std::size_t i = 0; i < indexes.size(); ++i) {
        const std::size_t s = shard_of(unpack_index(indexes[i]).seq, n);
        per_shard[s].push_back(indexes[i]);
        positions[s].push_back(i);
    }
    std::vector<wire::SuffixItem> out(indexes.size());
    for (std::size_t s = 0; s < n; ++s) {
        auto items = mget_suffix(s, per_shard[s]);
        for (std::size_t j = 0; j < items.size(); ++j)
            out[positions[s][j]] = std::move(items[j]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Clusters

RemoteCluster::RemoteCluster(std::vector<Endpoint> endpoints) : endpoints_(std::move(endpoints)) {
    if (endpoints_.empty())
        throw TransportError("no store endpoints configured (pass --store or --embedded-store)");
}

StoreClient RemoteCluster::connect() const {
    std::vector<std::unique_ptr<ShardConnection>> conns;
    conns.reserve(endpoints_.size());
    for (const auto& ep : endpoints_)
        conns.push_back(std::make_unique<TcpConnection>(ep));
    return StoreClient(std::move(conns));
}

EmbeddedCluster::EmbeddedCluster(std::size_t shard_count, EmbeddedTransport transport) : transport_(transport) {
    if (shard_count == 0)
        throw ConfigError("shard count must be positive");
    for (std::size_t i = 0; i < shard_count; ++i) {
        shards_.push_back(std::make_unique<Shard>(i, shard_count));
        if (transport_ == EmbeddedTransport::tcp)
            servers_.push_back(std::make_unique<ShardServer>(*shards_.back(), Endpoint{"127.0.0.1", 0}));
    }
}

EmbeddedCluster::~EmbeddedCluster() {
    for (auto& s : servers_)
        s->stop();
}

StoreClient EmbeddedCluster::connect() const {
    std::vector<std::unique_ptr<ShardConnection>> conns;
    for (std::size_t i = 0; i < shards_.size(); ++i) {
        if (transport_ == EmbeddedTransport::tcp)
            conns.push_back(std::make_unique<TcpConnection>(servers_[i]->endpoint()));
        else
            conns.push_back(std::make_unique<InProcessConnection>(*shards_[i]));
    }
    return StoreClient(std::move(conns));
}

std::vector<Endpoint> EmbeddedCluster::endpoints() const {
    std::vector<Endpoint> eps;
    for (const auto& s : servers_)
        eps.push_back(s->endpoint());
    return eps;
}

} // namespace sufforge
