#include "cookiescan/live.hpp"

#include "cookiescan/packet.hpp"

#include <arpa/inet.h>
#include <linux/if_ether.h>
#include <linux/if_packet.h>
#include <net/if.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>

namespace cookiescan {

namespace {

std::string errno_text(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

constexpr const char* kRemedy =
    " (raw sockets need root or CAP_NET_RAW; try `sudo setcap cap_net_raw,cap_net_admin=eip cookiescan`)";

} // namespace

bool live_opt_in_from_env() {
    const char* v = std::getenv(kLiveOptInEnv);
    return v && std::string_view(v) == "1";
}

LiveTransport::LiveTransport(const Options& opts) : epoch_(std::chrono::steady_clock::now()) {
    if (!opts.opt_in)
        throw LiveError(std::string("live transport is disabled: pass --live and set ") + kLiveOptInEnv + "=1");
    const unsigned ifindex = if_nametoindex(opts.interface.c_str());
    if (ifindex == 0) throw LiveError("unknown interface '" + opts.interface + "'");

    send_fd_ = ::socket(AF_INET, SOCK_RAW, IPPROTO_RAW);
    if (send_fd_ < 0) throw LiveError(errno_text("raw send socket") + kRemedy);
    const int mark = kLiveSocketMark;
    // Best effort: without CAP_NET_ADMIN the mark is not applied and the
    // firewall rule must match on something else.
    (void)::setsockopt(send_fd_, SOL_SOCKET, SO_MARK, &mark, sizeof mark);

    recv_fd_ = ::socket(AF_PACKET, SOCK_DGRAM, htons(ETH_P_IP));
    if (recv_fd_ < 0) {
        ::close(send_fd_);
        throw LiveError(errno_text("packet receive socket") + kRemedy);
    }
    // Locally generated frames (loopback, offloading NICs) are captured before
    // the TCP checksum is filled in; auxdata tells us which ones.
    const int one = 1;
    (void)::setsockopt(recv_fd_, SOL_PACKET, PACKET_AUXDATA, &one, sizeof one);
    sockaddr_ll sll{};
    sll.sll_family = AF_PACKET;
    sll.sll_protocol = htons(ETH_P_IP);
    sll.sll_ifindex = static_cast<int>(ifindex);
    if (::bind(recv_fd_, reinterpret_cast<sockaddr*>(&sll), sizeof sll) < 0) {
        const auto msg = errno_text("bind packet socket");
        ::close(send_fd_);
        ::close(recv_fd_);
        throw LiveError(msg);
    }
}

LiveTransport::~LiveTransport() {
    if (send_fd_ >= 0) ::close(send_fd_);
    if (recv_fd_ >= 0) ::close(recv_fd_);
}

void LiveTransport::send(std::span<const std::uint8_t> frame) {
    if (frame.size() < 20) return;
    sockaddr_in dst{};
    dst.sin_family = AF_INET;
    std::memcpy(&dst.sin_addr.s_addr, frame.data() + 16, 4);
    if (::sendto(send_fd_, frame.data(), frame.size(), 0, reinterpret_cast<sockaddr*>(&dst), sizeof dst) < 0)
        ++send_errors_;
}

std::optional<Bytes> LiveTransport::receive(int timeout_ms) {
    pollfd pfd{recv_fd_, POLLIN, 0};
    while (true) {
        const int rc = ::poll(&pfd, 1, timeout_ms);
        if (rc <= 0) return std::nullopt;
        Bytes buf(65536);
        sockaddr_ll from{};
        iovec iov{buf.data(), buf.size()};
        alignas(cmsghdr) char control[CMSG_SPACE(sizeof(tpacket_auxdata))];
        msghdr msg{};
        msg.msg_name = &from;
        msg.msg_namelen = sizeof from;
        msg.msg_iov = &iov;
        msg.msg_iovlen = 1;
        msg.msg_control = control;
        msg.msg_controllen = sizeof control;
        const ssize_t n = ::recvmsg(recv_fd_, &msg, 0);
        if (n <= 0) return std::nullopt;
        // Our own transmissions show up here too.
        if (from.sll_pkttype == PACKET_OUTGOING) {
            timeout_ms = 0;
            continue;
        }
        bool csum_pending = false;
        for (cmsghdr* c = CMSG_FIRSTHDR(&msg); c; c = CMSG_NXTHDR(&msg, c))
            if (c->cmsg_level == SOL_PACKET && c->cmsg_type == PACKET_AUXDATA) {
                tpacket_auxdata aux;
                std::memcpy(&aux, CMSG_DATA(c), sizeof aux);
                csum_pending = aux.tp_status & TP_STATUS_CSUMNOTREADY;
            }
        buf.resize(static_cast<std::size_t>(n));
        if (csum_pending) complete_tcp_checksum(buf);
        return buf;
    }
}

Timestamp LiveTransport::now() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_).count();
}

} // namespace cookiescan
