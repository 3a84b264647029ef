"""Services and client stubs."""

from incnet.client.agent import ServiceUnknown, Cancelled, HandlerPanic
from incnet.netfilter.config import ServiceFilters
from incnet.netfilter.netfilter import read_netfilter
from incnet.netfilter.schema import read_schema
from incnet.rpc.iedt import marshal, unmarshal
from incnet.utils.io import data_path
import os

__all__ = ['Service', 'Stub', 'load_service', 'ServiceUnknown', 'Cancelled',
           'HandlerPanic']


class Service(object):
    """Schema, NetFilters and handlers of one application.

    Parameters
    ----------
    schema : :class:`incnet.netfilter.schema.ServiceSchema`
        Methods and messages.
    filters : list of :class:`incnet.netfilter.netfilter.NetFilter`
        Filters of the application in filter index order.
    handlers : dict
        Method name -> callable(fields) returning the reply's opaque fields
        (and optionally the keys of a pulled map field). Methods without a
        handler reply with an empty message.
    memory : int
        Data rows requested from the switch.
    clear_mode : string
        Overrides the clear policy derived from the filters.
    """

    def __init__(self, schema, filters, handlers=None, memory=320,
                 clear_mode=None):
        self.schema = schema
        self.filters = ServiceFilters(schema, filters)
        self.handlers = handlers if handlers is not None else {}
        self.memory = memory
        self.clear_mode = clear_mode

    @property
    def name(self):
        return self.filters.app_name or self.schema.name

    def handle(self, method, fields):
        handler = self.handlers.get(method)
        if handler is None:
            return {}
        return handler(fields)

    def validate(self, n_clients=None):
        return self.filters.validate(n_clients=n_clients)


def _find(name):
    if os.path.exists(name):
        return name
    return data_path(name)


def load_service(schema_file, filter_files, handlers=None, app_name=None,
                 **kwargs):
    """Service from a schema file and its filter files.

    Bare file names are looked up in ``incnet/data`` when not found.
    ``app_name`` renames the application so that several instances of one
    service can be registered side by side.
    """
    schema = read_schema(_find(schema_file))
    filters = [read_netfilter(_find(f)) for f in filter_files]
    if app_name is not None:
        for nf in filters:
            nf.app_name = app_name
    return Service(schema, filters, handlers=handlers, **kwargs)


class Stub(object):
    """Client side handle of one application.

    Parameters
    ----------
    agent : :class:`incnet.client.agent.ClientAgent`
        Agent of the calling host.
    gaid : int
        Application id.
    service : :class:`Service`
        Called service.
    """

    def __init__(self, agent, gaid, service):
        self.agent = agent
        self.gaid = gaid
        self.service = service

    def call(self, method, request):
        """Start a call.

        Returns
        -------
        process : :class:`simpy.events.Process`
            Yield it from an application process; its value is the reply.
        """
        return self.agent.env.process(self._call(method, request))

    def _call(self, method, request):
        schema = self.service.schema
        if method not in schema.methods:
            raise ServiceUnknown('{} has no method {}.'.format(schema.name,
                                                               method))
        msg = marshal(schema.request(method), request)
        reply = yield from self.agent.call(self.gaid, method, msg)
        return unmarshal(schema.reply(method), reply)
