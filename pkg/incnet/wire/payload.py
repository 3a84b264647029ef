"""Packet payload codec.

Payloads are canonical JSON objects (sorted keys, compact separators,
UTF-8).  The empty dict encodes to zero bytes so that packets without
payload keep the fixed packet sizes.
"""

import json
from incnet.wire.packet import MalformedPacket

# Payload kinds.
DATA = 'data'
CALL = 'call'
PULL = 'pull'
PROBE = 'probe'
COUNTS = 'counts'
ACK = 'ack'


def encode_payload(fields):
    if not fields:
        return b''
    return json.dumps(fields, sort_keys=True,
                      separators=(',', ':')).encode('utf-8')


def decode_payload(data):
    if not data:
        return {}
    try:
        fields = json.loads(data.decode('utf-8'))
    except (UnicodeDecodeError, ValueError) as err:
        raise MalformedPacket('Payload is not canonical JSON: {}'.format(err))
    if not isinstance(fields, dict):
        raise MalformedPacket('Payload must be a JSON object.')
    return fields
