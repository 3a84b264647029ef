"""Translate NetFilters into the operands the switch program consumes."""

from incnet.netfilter.netfilter import (
        NOP, OPCODES, CLIENT_ID, NULL_KEY, validate
        )
from incnet.netfilter.schema import SchemaError
from incnet.utils.misc import Violation

# Filters per application are indexed by the op_type high nibble.
MAX_FILTERS = 16


class SwitchProgramConfig(object):
    """Per-direction enable flags and operands for one method filter.

    Attributes
    ----------
    add_to_enabled : bool
        Map.addTo (followed by Map.get) on the client to server direction.
    get_enabled : bool
        Map.get on the server to client direction.
    clear_mode : string
        copy, shadow, lazy or nop; Map.clear on the server to client
        direction.
    modify_op : int
        Stream.modify operator code.
    modify_para : int
        Stream.modify operand.
    cntfwd_threshold : int
        CntFwd threshold, 0 when disabled.
    cntfwd_targets : string or tuple
        ALL, SRC, SERVER or an explicit endpoint tuple.
    cntfwd_key_mode : string
        ``ClientID``, ``NULL`` or ``field``.
    serve_in_switch : bool
        Client to server lookups are answered by the switch and turned
        around to the sender.
    """

    def __init__(self, add_to_enabled=False, get_enabled=False,
                 clear_mode=NOP, modify_op=0, modify_para=0,
                 cntfwd_threshold=0, cntfwd_targets='SERVER',
                 cntfwd_key_mode=NULL_KEY):
        self.add_to_enabled = add_to_enabled
        self.get_enabled = get_enabled
        self.clear_mode = clear_mode
        self.modify_op = modify_op
        self.modify_para = modify_para
        self.cntfwd_threshold = cntfwd_threshold
        self.cntfwd_targets = cntfwd_targets
        self.cntfwd_key_mode = cntfwd_key_mode
        self.serve_in_switch = (get_enabled and not add_to_enabled and
                                cntfwd_targets == 'SRC' and
                                clear_mode == NOP)

    @property
    def multicast(self):
        return self.cntfwd_targets == 'ALL' or isinstance(self.cntfwd_targets,
                                                          tuple)

    def is_identity(self):
        return (not self.add_to_enabled and not self.get_enabled and
                self.clear_mode == NOP and self.modify_op == 0 and
                self.cntfwd_threshold == 0)

    def as_dict(self):
        return dict((k, v) for k, v in self.__dict__.items())

    def __eq__(self, other):
        return (isinstance(other, SwitchProgramConfig) and
                self.as_dict() == other.as_dict())

    def __repr__(self):
        return 'SwitchProgramConfig({})'.format(self.as_dict())


def pipeline_config(nf):
    """Switch operands for a validated filter. Pure function of nf."""
    op, para = nf.modify
    key = nf.cntfwd.key
    if key not in (CLIENT_ID, NULL_KEY):
        key = 'field'
    return SwitchProgramConfig(add_to_enabled=nf.add_to != NOP,
                               get_enabled=nf.get != NOP,
                               clear_mode=nf.clear,
                               modify_op=OPCODES[op],
                               modify_para=para,
                               cntfwd_threshold=nf.cntfwd.threshold,
                               cntfwd_targets=nf.cntfwd.to,
                               cntfwd_key_mode=key)


class ServiceFilters(object):
    """Method to filter assignment for one service.

    A filter applies to a method when every message its bindings reference
    is the method's request or reply.  Methods without a filter are plain.

    Parameters
    ----------
    schema : :class:`ServiceSchema`
        Service description.
    filters : list of :class:`NetFilter`
        Filters of the application, in filter-index order.
    """

    def __init__(self, schema, filters):
        self.schema = schema
        self.filters = list(filters)
        if len(self.filters) > MAX_FILTERS:
            raise SchemaError('At most {} filters per application.'.format(
                MAX_FILTERS))
        self.by_method = {}
        for name, method in schema.methods.items():
            own = set((method.request, method.reply))
            hits = [i for i, nf in enumerate(self.filters)
                    if nf.bound_messages() and nf.bound_messages() <= own]
            if len(hits) > 1:
                raise SchemaError('Method {} matches several filters.'.format(
                    name))
            if hits:
                self.by_method[name] = hits[0]

    @property
    def app_name(self):
        return self.filters[0].app_name if self.filters else None

    def filter_for(self, method):
        """(index, NetFilter) of a method or (None, None) if plain."""
        idx = self.by_method.get(method)
        if idx is None:
            return None, None
        return idx, self.filters[idx]

    def configs(self):
        return [pipeline_config(nf) for nf in self.filters]

    def clear_mode(self):
        return app_clear_mode(self.filters)

    def validate(self, n_clients=None):
        report = []
        names = set(nf.app_name for nf in self.filters)
        if len(names) > 1:
            report.append(Violation('AppNameMismatch', ','.join(sorted(names)),
                                    'filters of one service disagree'))
        for nf in self.filters:
            report += validate(nf, self.schema, n_clients=n_clients)
        return report


def app_clear_mode(filters):
    """Application wide clear mode, shadow if any filter needs it."""
    modes = set(nf.clear for nf in filters)
    for mode in ('shadow', 'lazy', 'copy'):
        if mode in modes:
            return mode
    return NOP
